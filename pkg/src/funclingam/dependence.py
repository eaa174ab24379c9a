"""Kernel dependence between multivariate samples.

The default measure is the biased HSIC V-statistic

    HSIC(X, Y) = trace(K H L H) / n^2

with Gaussian kernels whose widths come from the median heuristic.  Other
measures can be registered in :data:`MEASURES`; discovery only needs a
callable ``(X, Y) -> float``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import DataError, DegenerateDataError, InvalidArgumentError

__all__ = [
    "DependenceStat",
    "median_bandwidth",
    "gaussian_gram",
    "centered_gram",
    "hsic",
    "hsic_value",
    "hsic_pvalue",
    "MEASURES",
    "get_measure",
    "DEFAULT_SUBSAMPLE",
]

DEFAULT_SUBSAMPLE = 2000


@dataclass(frozen=True)
class DependenceStat:
    value: float
    measure_name: str
    bandwidths: Tuple[float, float]


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    elif X.ndim != 2:
        raise DataError(f"sample matrix must be 1-D or 2-D, got {X.ndim}-D")
    if not np.all(np.isfinite(X)):
        raise DataError("sample matrix contains non-finite values")
    return X


def median_bandwidth(X) -> float:
    """Median Euclidean distance over distinct pairs of rows."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise DegenerateDataError("median heuristic needs at least two rows")
    med = float(np.median(pdist(X)))
    if med <= 0:
        # more than half the pairs coincide; fall back to the positive distances
        d = pdist(X)
        d = d[d > 0]
        if d.size == 0:
            raise DegenerateDataError("all rows are identical")
        med = float(np.median(d))
    return med


def gaussian_gram(X, bandwidth: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """Gaussian kernel matrix ``exp(-|x - x'|^2 / (2 s^2))`` and the width used."""
    X = _as_matrix(X)
    if bandwidth is None:
        bandwidth = median_bandwidth(X)
    if not bandwidth > 0:
        raise DegenerateDataError(f"kernel bandwidth must be positive, got {bandwidth}")
    sq = squareform(pdist(X, "sqeuclidean"))
    return np.exp(-sq / (2.0 * bandwidth * bandwidth)), float(bandwidth)


def centered_gram(K: np.ndarray) -> np.ndarray:
    """``H K H`` with ``H = I - 11^T / n``."""
    row = K.mean(axis=0)
    return K - row[None, :] - row[:, None] + row.mean()


def _is_constant(X: np.ndarray) -> bool:
    return bool(np.all(X == X[0]))


def _bandwidth_or_none(X: np.ndarray, bandwidth: Optional[float]) -> Optional[float]:
    # None when distinct rows are still numerically coincident (distances underflow)
    if bandwidth is not None:
        return bandwidth
    try:
        return median_bandwidth(X)
    except DegenerateDataError:
        return None


def _subsample(X, Y, limit, seed):
    n = X.shape[0]
    if limit is None or n <= limit:
        return X, Y
    idx = np.sort(np.random.default_rng(seed).choice(n, size=limit, replace=False))
    return X[idx], Y[idx]


def hsic(
    X,
    Y,
    bandwidths: Optional[Tuple[Optional[float], Optional[float]]] = None,
    subsample: Optional[int] = DEFAULT_SUBSAMPLE,
    seed: int = 0,
) -> DependenceStat:
    """Biased HSIC between the rows of ``X`` and ``Y``.

    A constant argument has a vanishing centered kernel, so the statistic is
    exactly 0 and its bandwidth is reported as 1.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise InvalidArgumentError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] < 4:
        raise InvalidArgumentError(f"HSIC needs at least 4 rows, got {X.shape[0]}")
    X, Y = _subsample(X, Y, subsample, seed)
    n = X.shape[0]
    bx, by = bandwidths if bandwidths is not None else (None, None)
    if _is_constant(X) or _is_constant(Y):
        return DependenceStat(0.0, "hsic", (bx or 1.0, by or 1.0))
    bx, by = _bandwidth_or_none(X, bx), _bandwidth_or_none(Y, by)
    if bx is None or by is None:
        return DependenceStat(0.0, "hsic", (bx or 1.0, by or 1.0))
    K, bx = gaussian_gram(X, bx)
    Lm, by = gaussian_gram(Y, by)
    value = float(np.sum(centered_gram(K) * Lm)) / (n * n)
    return DependenceStat(max(value, 0.0), "hsic", (bx, by))


def hsic_value(X, Y, subsample: Optional[int] = DEFAULT_SUBSAMPLE, seed: int = 0) -> float:
    return hsic(X, Y, subsample=subsample, seed=seed).value


def hsic_pvalue(X, Y, B: int = 199, seed: int = 0) -> float:
    """Permutation p-value ``(1 + #{HSIC_b >= HSIC}) / (B + 1)``."""
    if B < 50:
        raise InvalidArgumentError(f"need at least 50 permutations, got {B}")
    X, Y = _as_matrix(X), _as_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise InvalidArgumentError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] < 4:
        raise InvalidArgumentError(f"HSIC needs at least 4 rows, got {X.shape[0]}")
    if _is_constant(X) or _is_constant(Y):
        return 1.0
    bx, by = _bandwidth_or_none(X, None), _bandwidth_or_none(Y, None)
    if bx is None or by is None:
        return 1.0
    Kc = centered_gram(gaussian_gram(X, bx)[0])
    Lm = gaussian_gram(Y, by)[0]
    observed = float(np.sum(Kc * Lm))
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    exceed = 0
    for _ in range(B):
        perm = rng.permutation(n)
        stat = float(np.sum(Kc * Lm[np.ix_(perm, perm)]))
        # relative slack absorbs summation-order noise for identity-like permutations
        if stat >= observed - 1e-12 * abs(observed):
            exceed += 1
    return (1 + exceed) / (B + 1)


MEASURES: Dict[str, Callable[..., float]] = {"hsic": hsic_value}


def get_measure(name: str) -> Callable[..., float]:
    try:
        return MEASURES[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown dependence measure {name!r}; choose from {sorted(MEASURES)}"
        ) from None
