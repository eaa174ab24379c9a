"""Graph-recovery scores, benchmark aggregation and normality diagnostics."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import stats

from .curves import CurvePanel
from .discovery import BinaryGraph, DiscoveryConfig, discover
from .exceptions import DataError, FuncLingamError, InsufficientDataError, InvalidArgumentError
from .synthgen import SynthConfig, generate

__all__ = [
    "MetricsReport",
    "GaussianityScan",
    "CellResult",
    "TrialTable",
    "confusion",
    "shd",
    "evaluate",
    "jarque_bera_pvalues",
    "gaussianity_scan",
    "benchmark",
    "run_trial",
    "METRIC_NAMES",
]

log = logging.getLogger(__name__)

METRIC_NAMES = ("precision", "recall", "f1", "shd")


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    shd: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(pred: BinaryGraph, truth: BinaryGraph):
    if pred.p != truth.p:
        raise DataError(f"graphs have different sizes: {pred.p} vs {truth.p}")


def confusion(pred: BinaryGraph, truth: BinaryGraph) -> MetricsReport:
    """Directed-edge precision, recall and F1.

    A reversed edge counts as one false positive and one false negative.
    Rates with an empty denominator are 0.
    """
    _check_pair(pred, truth)
    a, b = pred.adjacency, truth.adjacency
    tp = int(np.sum(a & b))
    fp = int(np.sum(a & ~b))
    fn = int(np.sum(~a & b))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricsReport(precision, recall, f1, tp, fp, fn)


def shd(pred: BinaryGraph, truth: BinaryGraph) -> int:
    """Structural Hamming distance with unit-cost insertions, deletions and reversals."""
    _check_pair(pred, truth)
    a, b = pred.adjacency, truth.adjacency
    total = 0
    for i in range(a.shape[0]):
        for j in range(i + 1, a.shape[0]):
            fwd = a[j, i] != b[j, i]
            bwd = a[i, j] != b[i, j]
            # a single edge pointing the other way is one reversal
            reversed_edge = fwd and bwd and a[j, i] != a[i, j]
            total += 1 if reversed_edge else int(fwd) + int(bwd)
    return total


def evaluate(pred: BinaryGraph, truth: BinaryGraph) -> MetricsReport:
    """Confusion rates plus SHD in one report."""
    m = confusion(pred, truth)
    return MetricsReport(m.precision, m.recall, m.f1, m.tp, m.fp, m.fn, shd(pred, truth))


def jarque_bera_pvalues(x: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Jarque-Bera p-values along ``axis`` and a mask of constant columns.

    Constant columns get p-value 0.
    """
    x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
    n = x.shape[0]
    d = x - x.mean(axis=0)
    m2 = np.mean(d**2, axis=0)
    degenerate = m2 <= 1e-14 * np.maximum(1.0, np.mean(x**2, axis=0))
    safe = np.where(degenerate, 1.0, m2)
    skew = np.mean(d**3, axis=0) / safe**1.5
    kurt = np.mean(d**4, axis=0) / safe**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    pvals = stats.chi2.sf(jb, df=2)
    return np.where(degenerate, 0.0, pvals), degenerate


@dataclass(frozen=True)
class GaussianityScan:
    """Per (variable, time point) normality p-values of a panel."""

    pvalues: np.ndarray
    degenerate: np.ndarray

    def rejection_fraction(self, alpha: float = 0.05) -> float:
        return float(np.mean(self.pvalues < alpha))


def gaussianity_scan(panel: CurvePanel) -> GaussianityScan:
    """Marginal normality test at every variable and time point."""
    if panel.n < 20:
        raise InsufficientDataError(f"normality scan needs n >= 20, got {panel.n}")
    pvals, degenerate = jarque_bera_pvalues(panel.values, axis=0)
    return GaussianityScan(pvals, degenerate)


@dataclass
class CellResult:
    n: int
    p: int
    trials: int
    seeds: List[int]
    records: List[Optional[dict]]
    failures: List[dict] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return len(self.failures) / self.trials if self.trials else 0.0

    @property
    def failed(self) -> bool:
        return self.failure_rate > 0.10

    def summary(self) -> Dict[str, Tuple[float, float]]:
        out = {}
        ok = [r for r in self.records if r is not None]
        for name in METRIC_NAMES:
            vals = np.array([r[name] for r in ok], dtype=float)
            if vals.size == 0:
                out[name] = (math.nan, math.nan)
                continue
            sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            out[name] = (float(math.fsum(vals) / vals.size), sd)
        return out


@dataclass
class TrialTable:
    cells: List[CellResult]
    config: dict

    @property
    def failed(self) -> bool:
        return any(c.failed for c in self.cells)

    def cell(self, n: int, p: int) -> CellResult:
        for c in self.cells:
            if c.n == n and c.p == p:
                return c
        raise KeyError((n, p))

    def mean(self, n: int, p: int, metric: str) -> float:
        return self.cell(n, p).summary()[metric][0]

    def rows(self) -> List[dict]:
        out = []
        for c in self.cells:
            ok = sum(r is not None for r in c.records)
            for name, (mean, sd) in c.summary().items():
                out.append({"n": c.n, "p": c.p, "metric": name, "mean": mean, "sd": sd, "trials": ok})
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "cells": [
                {
                    "n": c.n,
                    "p": c.p,
                    "trials": c.trials,
                    "seeds": c.seeds,
                    "failures": c.failures,
                    "failed": c.failed,
                    "summary": {k: {"mean": m, "sd": s} for k, (m, s) in c.summary().items()},
                    "records": c.records,
                }
                for c in self.cells
            ],
        }


def run_trial(n: int, p: int, seed: int, synth: dict, disc: DiscoveryConfig) -> dict:
    """Generate one dataset, run discovery and score it against the truth."""
    panel, truth = generate(SynthConfig(**{**synth, "n": n, "p": p, "seed": seed}))
    report = discover(panel, disc)
    m = evaluate(report.graph, truth.graph)
    rec = m.to_dict()
    rec.update(seed=seed, M=report.M, order=list(report.order.order))
    return rec


def _safe_trial(args):
    n, p, seed, synth, disc = args
    try:
        return run_trial(n, p, seed, synth, disc), None
    except FuncLingamError as exc:
        return None, {"seed": seed, "error": str(exc)}


def _thread_cap() -> int:
    raw = os.environ.get("FUNC_LINGAM_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidArgumentError(f"FUNC_LINGAM_THREADS must be an integer, got {raw!r}") from None


def benchmark(
    grid: Iterable[Tuple[int, int]],
    trials: int,
    seed: int = 0,
    config: Optional[DiscoveryConfig] = None,
    synth: Optional[dict] = None,
    workers: Optional[int] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> TrialTable:
    """Run ``trials`` generate/discover/score rounds for each ``(n, p)`` cell.

    Trial ``t`` of every cell uses seed ``seed + t``.  Failures are recorded
    per trial; a cell is marked failed above a 10% failure rate.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    config = config or DiscoveryConfig()
    synth = dict(synth or {})
    synth.pop("n", None), synth.pop("p", None), synth.pop("seed", None)
    workers = workers or _thread_cap()
    cells = []
    for n, p in grid:
        seeds = [seed + t for t in range(trials)]
        jobs = [(n, p, s, synth, config) for s in seeds]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_safe_trial, jobs))
        else:
            results = []
            for k, job in enumerate(jobs):
                results.append(_safe_trial(job))
                if progress:
                    progress(f"n={n} p={p} trial {k + 1}/{trials}")
        records = [r for r, _ in results]
        failures = [f for _, f in results if f is not None]
        for f in failures:
            log.warning("trial failed n=%d p=%d seed=%d: %s", n, p, f["seed"], f["error"])
        cells.append(CellResult(n, p, trials, seeds, records, failures))
    table_config = {
        "trials": trials,
        "seed": seed,
        "grid": [[c.n, c.p] for c in cells],
        "discovery": config.to_dict(),
        "synth": synth,
    }
    return TrialTable(cells, table_config)
