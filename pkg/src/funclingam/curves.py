"""Sampled functional panels, basis systems and least-squares smoothing.

A :class:`CurvePanel` holds ``n`` samples of ``p`` functional variables
observed on a shared grid of ``W`` time points.  Curves are smoothed onto a
finite basis (cubic B-splines by default, or an orthonormal Fourier system)
and represented by their coefficients in a :class:`CoefPanel`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import DataError, InvalidArgumentError, SingularityError

__all__ = [
    "TimeGrid",
    "CurvePanel",
    "BasisSystem",
    "CoefPanel",
    "build_time_grid",
    "bspline_basis",
    "fourier_basis",
    "basis_from_descriptor",
    "fit_coefficients",
    "reconstruct",
    "trapezoid_weights",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sampling times shared by every curve of a panel."""

    points: np.ndarray

    def __post_init__(self):
        pts = _readonly(np.ravel(self.points))
        if pts.size < 2:
            raise InvalidArgumentError("a time grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise DataError("time grid contains non-finite values")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())


@dataclass(frozen=True)
class CurvePanel:
    """Real observations of shape ``(n, p, W)`` on a :class:`TimeGrid`."""

    values: np.ndarray
    grid: TimeGrid
    variable_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 3:
            raise DataError(f"panel values must be 3-D (n, p, W), got shape {values.shape}")
        n, p, w = values.shape
        if w != len(self.grid):
            raise DataError(f"panel has {w} time points but grid has {len(self.grid)}")
        if n < 2 or p < 1:
            raise DataError(f"panel needs n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(values)):
            raise DataError("panel contains non-finite values")
        names = self.variable_names
        if names is None:
            names = [f"f{j + 1}" for j in range(p)]
        names = tuple(str(s) for s in names)
        if len(names) != p:
            raise DataError(f"expected {p} variable names, got {len(names)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def w(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class BasisSystem:
    """A basis evaluated on a grid.

    Attributes
    ----------
    kind : str
        ``"bspline"`` or ``"fourier"``.
    eval : ndarray, shape (W, L)
        Basis functions evaluated at the grid points.
    gram : ndarray, shape (L, L)
        Trapezoid-rule approximation of the inner products of basis functions.
    params : dict
        Construction parameters (order and knots, or harmonic count).
    """

    kind: str
    grid: TimeGrid
    eval: np.ndarray
    gram: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "eval", _readonly(self.eval))
        object.__setattr__(self, "gram", _readonly(self.gram))

    @property
    def L(self) -> int:
        return self.eval.shape[1]

    def descriptor(self) -> dict:
        """JSON-serializable description sufficient to rebuild the basis."""
        d = {"kind": self.kind, "L": self.L, "grid": self.grid.points.tolist()}
        d.update(self.params)
        return d


@dataclass(frozen=True)
class CoefPanel:
    """Basis coefficients of shape ``(n, p, L)``."""

    coefs: np.ndarray
    basis: BasisSystem
    variable_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        coefs = _readonly(self.coefs)
        if coefs.ndim != 3 or coefs.shape[2] != self.basis.L:
            raise DataError(
                f"coefficient tensor shape {coefs.shape} does not match basis dimension {self.basis.L}"
            )
        if not np.all(np.isfinite(coefs)):
            raise DataError("coefficients contain non-finite values")
        names = self.variable_names
        if names is None:
            names = [f"f{j + 1}" for j in range(coefs.shape[1])]
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "variable_names", tuple(names))

    @property
    def n(self) -> int:
        return self.coefs.shape[0]

    @property
    def p(self) -> int:
        return self.coefs.shape[1]


def build_time_grid(w: int) -> TimeGrid:
    """Equidistant grid of ``w`` points from 0 to 1 inclusive."""
    if int(w) != w or w < 2:
        raise InvalidArgumentError(f"grid size must be an integer >= 2, got {w!r}")
    return TimeGrid(np.linspace(0.0, 1.0, int(w)))


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Quadrature weights of the composite trapezoid rule on ``points``."""
    h = np.diff(points)
    wts = np.zeros_like(points)
    wts[:-1] += h / 2
    wts[1:] += h / 2
    return wts


def _gram(phi: np.ndarray, points: np.ndarray) -> np.ndarray:
    g = phi.T @ (trapezoid_weights(points)[:, None] * phi)
    # (a + b) / 2 is commutative in floating point, so this is exactly symmetric
    return (g + g.T) / 2


def bspline_basis(grid: TimeGrid, L: int = 20, order: int = 4) -> BasisSystem:
    """Clamped B-spline basis with uniform interior knots.

    Parameters
    ----------
    grid : TimeGrid
    L : int
        Number of basis functions; must satisfy ``order <= L < W``.
    order : int
        Spline order (degree + 1).  4 gives cubic splines.
    """
    if order < 1:
        raise InvalidArgumentError(f"B-spline order must be >= 1, got {order}")
    if L < order:
        raise InvalidArgumentError(f"need L >= order, got L={L}, order={order}")
    if L >= len(grid):
        raise SingularityError(
            f"L={L} basis functions cannot be identified from W={len(grid)} points"
        )
    pts = grid.points
    lo, hi = pts[0], pts[-1]
    k = order - 1
    inner = np.linspace(lo, hi, L - order + 2)
    knots = np.r_[np.full(k, lo), inner, np.full(k, hi)]
    phi = BSpline.design_matrix(pts, knots, k).toarray()
    if k == 0:
        # degree-0 splines are half-open; assign the right endpoint to the last interval
        phi[-1] = 0.0
        phi[-1, -1] = 1.0
    if np.linalg.matrix_rank(phi) < L:
        raise SingularityError("B-spline design matrix is rank deficient on this grid")
    return BasisSystem(
        kind="bspline",
        grid=grid,
        eval=phi,
        gram=_gram(phi, pts),
        params={"order": int(order), "knots": knots.tolist()},
    )


def fourier_basis(grid: TimeGrid, K: int = 5) -> BasisSystem:
    """Fourier system ``1, sqrt2 sin(2 pi k t), sqrt2 cos(2 pi k t), ...`` on [0, 1].

    ``K`` must be odd so every harmonic comes as a sine/cosine pair.
    """
    if K < 1 or K % 2 == 0:
        raise InvalidArgumentError(f"Fourier basis size must be odd and positive, got {K}")
    if K >= len(grid):
        raise SingularityError(f"K={K} exceeds what W={len(grid)} points can resolve")
    phi = fourier_matrix(grid.points, K)
    return BasisSystem(
        kind="fourier", grid=grid, eval=phi, gram=_gram(phi, grid.points), params={}
    )


def fourier_matrix(t: np.ndarray, K: int) -> np.ndarray:
    """Evaluate the first ``K`` orthonormal Fourier functions at ``t``."""
    t = np.asarray(t, dtype=float)
    cols = [np.ones_like(t)]
    for h in range(1, (K - 1) // 2 + 1):
        arg = 2 * np.pi * h * t
        cols.append(np.sqrt(2) * np.sin(arg))
        cols.append(np.sqrt(2) * np.cos(arg))
    return np.column_stack(cols)


def basis_from_descriptor(desc: dict) -> BasisSystem:
    """Inverse of :meth:`BasisSystem.descriptor`."""
    grid = TimeGrid(np.asarray(desc["grid"], dtype=float))
    if desc["kind"] == "bspline":
        return bspline_basis(grid, int(desc["L"]), int(desc["order"]))
    if desc["kind"] == "fourier":
        return fourier_basis(grid, int(desc["L"]))
    raise InvalidArgumentError(f"unknown basis kind {desc['kind']!r}")


def fit_coefficients(
    panel: CurvePanel, basis: BasisSystem, ridge: Optional[float] = None
) -> CoefPanel:
    """Least-squares coefficients of every curve in ``panel``.

    Minimizes ``||y - Phi c||^2 + ridge ||c||^2`` for each curve.  When
    ``ridge`` is None it defaults to ``1e-10 * trace(Phi^T Phi) / L``.
    """
    if panel.grid != basis.grid:
        raise DataError("panel grid does not match the basis grid")
    if not np.all(np.isfinite(panel.values)):
        raise DataError("panel contains non-finite values")
    phi = basis.eval
    A = phi.T @ phi
    if ridge is None:
        ridge = 1e-10 * np.trace(A) / basis.L
    if ridge < 0:
        raise InvalidArgumentError(f"ridge must be non-negative, got {ridge}")
    A = A + ridge * np.eye(basis.L)
    rhs = panel.values.reshape(-1, panel.w) @ phi  # (n*p, L)
    try:
        chol = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("normal equations of the basis fit are singular") from exc
    z = np.linalg.solve(chol, rhs.T)
    coefs = np.linalg.solve(chol.T, z).T
    return CoefPanel(
        coefs.reshape(panel.n, panel.p, basis.L), basis, panel.variable_names
    )


def reconstruct(coefs: CoefPanel) -> CurvePanel:
    """Evaluate the basis expansions of ``coefs`` on the basis grid."""
    values = coefs.coefs @ coefs.basis.eval.T
    return CurvePanel(values, coefs.basis.grid, coefs.variable_names)
