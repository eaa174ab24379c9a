"""File formats: long-format panel CSV + JSON sidecar, reports, tables.

Every writer goes through :func:`atomic_write` (temporary file in the target
directory, then ``os.replace``).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from .curves import CurvePanel, TimeGrid
from .discovery import BinaryGraph, DiscoveryReport
from .exceptions import DataError
from .fpca import FpcaModel, ScorePanel
from .metrics import GaussianityScan, TrialTable
from .synthgen import GroundTruth

PathLike = Union[str, os.PathLike]

PANEL_COLUMNS = ["sample_id", "variable_id", "time_index", "value"]


def _umask() -> int:
    current = os.umask(0)
    os.umask(current)
    return current


def atomic_write(path: PathLike, data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def write_json(path: PathLike, obj) -> Path:
    return atomic_write(path, dumps(obj))


def read_json(path: PathLike):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc


def _frame_to_csv(df: pd.DataFrame) -> str:
    # default float formatting is repr(), which round-trips exactly
    return df.to_csv(index=False, lineterminator="\n")


def sidecar_path(csv_path: PathLike) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_panel(panel: CurvePanel, csv_path: PathLike, config: Optional[dict] = None) -> Path:
    """Write ``panel`` as long-format CSV plus a JSON sidecar with the same stem."""
    n, p, w = panel.values.shape
    s, v, t = np.meshgrid(np.arange(n), np.arange(p), np.arange(w), indexing="ij")
    df = pd.DataFrame(
        {
            "sample_id": s.ravel(),
            "variable_id": v.ravel(),
            "time_index": t.ravel(),
            "value": panel.values.ravel(),
        }
    )
    atomic_write(csv_path, _frame_to_csv(df))
    meta = {
        "n": n,
        "p": p,
        "w": w,
        "grid": panel.grid.points.tolist(),
        "variables": list(panel.variable_names),
    }
    if config is not None:
        meta["config"] = config
    write_json(sidecar_path(csv_path), meta)
    return Path(csv_path)


def read_panel(csv_path: PathLike, sidecar: Optional[PathLike] = None) -> CurvePanel:
    """Read and validate a panel written by :func:`write_panel`."""
    csv_path = Path(csv_path)
    if csv_path.is_dir():
        csv_path = csv_path / "panel.csv"
    if not csv_path.is_file():
        raise DataError(f"missing panel file: {csv_path}")
    meta = read_json(sidecar or sidecar_path(csv_path))
    try:
        n, p, w = int(meta["n"]), int(meta["p"]), int(meta["w"])
        grid = TimeGrid(np.asarray(meta["grid"], dtype=float))
        names = list(meta.get("variables") or [f"f{j + 1}" for j in range(p)])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed panel sidecar: {exc}") from exc
    if len(grid) != w:
        raise DataError(f"sidecar grid has {len(grid)} points but w={w}")
    try:
        df = pd.read_csv(csv_path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse {csv_path}: {exc}") from exc
    if list(df.columns) != PANEL_COLUMNS:
        raise DataError(f"panel CSV header must be {','.join(PANEL_COLUMNS)}")
    if len(df) != n * p * w:
        raise DataError(f"panel CSV has {len(df)} rows, expected n*p*w = {n * p * w}")
    idx = df[PANEL_COLUMNS[:3]].to_numpy()
    if not np.issubdtype(idx.dtype, np.integer):
        raise DataError("panel index columns must be integers")
    bounds = np.array([n, p, w])
    if np.any(idx < 0) or np.any(idx >= bounds):
        raise DataError("panel CSV index out of range for the sidecar shape")
    values = np.full((n, p, w), np.nan)
    values[idx[:, 0], idx[:, 1], idx[:, 2]] = df["value"].to_numpy(dtype=float)
    if np.isnan(values).any():
        raise DataError("panel CSV has missing or duplicate cells")
    return CurvePanel(values, grid, names)


def write_truth(truth: GroundTruth, path: PathLike, config: Optional[dict] = None) -> Path:
    obj = truth.to_dict()
    if config is not None:
        obj["config"] = config
    return write_json(path, obj)


def read_graph(path: PathLike) -> BinaryGraph:
    """Adjacency from a truth file or a discovery report."""
    obj = read_json(path)
    if "adjacency" not in obj:
        raise DataError(f"{path} has no adjacency matrix")
    try:
        return BinaryGraph(np.asarray(obj["adjacency"], dtype=int).astype(bool))
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed adjacency: {exc}") from exc


def report_to_dot(report: DiscoveryReport) -> str:
    names = report.variable_names
    lines = ["digraph {"]
    lines += [f'  "{name}";' for name in names]
    norms = report.block_norms
    for src, dst in report.graph.edges():
        w = norms[dst, src] / np.sqrt(report.M)
        lines.append(f'  "{names[src]}" -> "{names[dst]}" [label="{w:.3f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_report(report: DiscoveryReport, outdir: PathLike, run_config: Optional[dict] = None):
    outdir = Path(outdir)
    obj = report.to_dict()
    if run_config is not None:
        obj["run_config"] = run_config
    write_json(outdir / "report.json", obj)
    atomic_write(outdir / "graph.dot", report_to_dot(report))
    return outdir / "report.json", outdir / "graph.dot"


def fpca_model_to_dict(model: FpcaModel) -> dict:
    return {
        "mean_coef": model.mean_coef.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
        "eigenfunctions": model.eigenfunctions.tolist(),
        "gram": model.gram.tolist(),
        "basis": model.basis_descriptor,
    }


def fpca_model_from_dict(obj: dict) -> FpcaModel:
    gram = np.asarray(obj["gram"], dtype=float)
    eigfuns = np.asarray(obj["eigenfunctions"], dtype=float)
    return FpcaModel(
        mean_coef=np.asarray(obj["mean_coef"], dtype=float),
        eigenvalues=np.asarray(obj["eigenvalues"], dtype=float),
        eigenfunctions=eigfuns,
        score_loadings=np.einsum("kl,plm->pkm", gram, eigfuns),
        gram=gram,
        basis_descriptor=obj.get("basis"),
    )


def scores_to_csv(scores: ScorePanel) -> str:
    n, p, M = scores.scores.shape
    s, v, m = np.meshgrid(np.arange(n), np.arange(p), np.arange(M), indexing="ij")
    df = pd.DataFrame(
        {
            "sample_id": s.ravel(),
            "variable_id": v.ravel(),
            "component": m.ravel(),
            "score": scores.scores.ravel(),
        }
    )
    return _frame_to_csv(df)


def scores_from_csv(path: PathLike) -> ScorePanel:
    df = pd.read_csv(path, float_precision="round_trip")
    if list(df.columns) != ["sample_id", "variable_id", "component", "score"]:
        raise DataError("score CSV header must be sample_id,variable_id,component,score")
    shape = tuple(int(df[c].max()) + 1 for c in ["sample_id", "variable_id", "component"])
    out = np.full(shape, np.nan)
    out[df["sample_id"], df["variable_id"], df["component"]] = df["score"].to_numpy()
    if np.isnan(out).any():
        raise DataError("score CSV has missing cells")
    return ScorePanel(out)


def write_table(table: TrialTable, outdir: PathLike, run_config: Optional[dict] = None):
    outdir = Path(outdir)
    df = pd.DataFrame(table.rows(), columns=["n", "p", "metric", "mean", "sd", "trials"])
    atomic_write(outdir / "table.csv", _frame_to_csv(df))
    obj = table.to_dict()
    if run_config is not None:
        obj["run_config"] = run_config
    write_json(outdir / "table.json", obj)
    return outdir / "table.csv", outdir / "table.json"


def write_gaussianity(scan: GaussianityScan, panel: CurvePanel, outdir: PathLike,
                      run_config: Optional[dict] = None, alpha: float = 0.05):
    outdir = Path(outdir)
    df = pd.DataFrame(
        scan.pvalues,
        index=pd.Index(panel.variable_names, name="variable"),
        columns=[f"t{k}" for k in range(panel.w)],
    )
    atomic_write(outdir / "gaussianity.csv", df.to_csv(lineterminator="\n"))
    summary = {
        "alpha": alpha,
        "rejection_fraction": scan.rejection_fraction(alpha),
        "rejection_fraction_by_variable": dict(
            zip(panel.variable_names, np.mean(scan.pvalues < alpha, axis=1).tolist())
        ),
        "degenerate": [
            [panel.variable_names[j], int(k)] for j, k in zip(*np.nonzero(scan.degenerate))
        ],
    }
    if run_config is not None:
        summary["run_config"] = run_config
    write_json(outdir / "gaussianity_summary.json", summary)
    return outdir / "gaussianity.csv", outdir / "gaussianity_summary.json"
