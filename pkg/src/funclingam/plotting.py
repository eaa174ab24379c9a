"""Figures written next to the CLI's tabular outputs."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}

# no timestamp or version in the PNG text chunks
_META = {"Software": None}


@contextmanager
def style():
    with plt.rc_context(RC):
        yield


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_benchmark(table, path):
    """Mean +- sd of each metric against p, one line per sample size."""
    rows = table.rows()
    metrics = ["precision", "recall", "f1", "shd"]
    with style():
        fig, axes = plt.subplots(2, 2, figsize=(7, 5), sharex=True)
        for ax, metric in zip(axes.ravel(), metrics):
            for n in sorted({r["n"] for r in rows}):
                sel = sorted((r for r in rows if r["n"] == n and r["metric"] == metric),
                             key=lambda r: r["p"])
                ps = [r["p"] for r in sel]
                ax.errorbar(ps, [r["mean"] for r in sel], yerr=[r["sd"] for r in sel],
                            marker="o", ms=3, capsize=2, label=f"n={n}")
            ax.set_title(metric.upper() if metric == "shd" else metric.capitalize())
            if metric != "shd":
                ax.set_ylim(-0.05, 1.05)
        for ax in axes[1]:
            ax.set_xlabel("number of functions p")
        axes[0, 0].legend()
        fig.tight_layout()
        return _save(fig, path)


def plot_block_norms(report, path):
    """Heatmap of normalized block norms with the binarized edges outlined."""
    norms = report.block_norms / np.sqrt(report.M)
    names = list(report.variable_names)
    p = len(names)
    with style():
        fig, ax = plt.subplots(figsize=(1.2 + 0.45 * p, 1.0 + 0.45 * p))
        im = ax.imshow(norms, cmap="viridis", vmin=0)
        ax.grid(False)
        for i, j in zip(*np.nonzero(report.graph.adjacency)):
            ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, ec="w", lw=1.5))
        ax.set_xticks(range(p), names, rotation=90)
        ax.set_yticks(range(p), names)
        ax.set_xlabel("cause")
        ax.set_ylabel("effect")
        fig.colorbar(im, ax=ax, label="||T_ij||_F / sqrt(M)")
        fig.tight_layout()
        return _save(fig, path)


def plot_gaussianity(scan, panel, path, alpha=0.05):
    """Normality p-values across time, one row per variable."""
    with style():
        fig, ax = plt.subplots(figsize=(7, 0.6 + 0.3 * panel.p))
        im = ax.imshow(np.log10(np.maximum(scan.pvalues, 1e-16)), aspect="auto",
                       cmap="magma", vmin=-16, vmax=0, interpolation="nearest")
        ax.grid(False)
        ax.set_yticks(range(panel.p), list(panel.variable_names))
        ax.set_xlabel("time index")
        ax.set_title(f"fraction rejected at {alpha}: {scan.rejection_fraction(alpha):.3f}")
        fig.colorbar(im, ax=ax, label="log10 p-value")
        fig.tight_layout()
        return _save(fig, path)
