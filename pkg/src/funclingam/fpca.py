"""Functional principal component analysis on basis coefficients.

Each variable is handled separately.  For centered coefficients with
sample covariance ``S`` and basis Gram matrix ``G``, the eigenproblem of the
covariance operator in the functional inner product is the symmetric
problem ``G^{1/2} S G^{1/2} u = lambda u``.  Eigenfunction coefficients are
``b = G^{-1/2} u`` (so ``b^T G b = I``) and the score of a centered curve
with coefficients ``c`` is ``c^T G b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curves import BasisSystem, CoefPanel
from .exceptions import (
    DataError,
    DegenerateDataError,
    InsufficientDataError,
    InvalidArgumentError,
    SingularityError,
)

__all__ = [
    "FpcaModel",
    "ScorePanel",
    "fpca_fit",
    "choose_components",
    "transform",
    "inverse_transform",
    "explained_variance_ratio",
]

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class FpcaModel:
    """Per-variable FPCA fit.

    Attributes
    ----------
    mean_coef : ndarray, shape (p, L)
    eigenvalues : ndarray, shape (p, L)
        Sorted descending within each variable.
    eigenfunctions : ndarray, shape (p, L, L)
        Column ``m`` of ``eigenfunctions[j]`` holds the basis coefficients of
        the ``m``-th eigenfunction of variable ``j``.
    score_loadings : ndarray, shape (p, L, L)
        ``G @ eigenfunctions[j]``; maps centered coefficients to scores.
    """

    mean_coef: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    score_loadings: np.ndarray
    gram: np.ndarray
    basis_descriptor: Optional[dict] = None

    @property
    def p(self) -> int:
        return self.mean_coef.shape[0]

    @property
    def L(self) -> int:
        return self.mean_coef.shape[1]


@dataclass(frozen=True)
class ScorePanel:
    """Centered FPCA scores of shape ``(n, p, M)``."""

    scores: np.ndarray
    model: Optional[FpcaModel] = None
    variable_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        if s.ndim != 3:
            raise DataError(f"scores must be 3-D (n, p, M), got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DataError("scores contain non-finite values")
        s.setflags(write=False)
        names = self.variable_names
        if names is None:
            names = [f"f{j + 1}" for j in range(s.shape[1])]
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "variable_names", tuple(names))

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def p(self) -> int:
        return self.scores.shape[1]

    @property
    def M(self) -> int:
        return self.scores.shape[2]

    def variable(self, j: int) -> np.ndarray:
        return self.scores[:, j, :]


def _sym_sqrt(gram: np.ndarray):
    """Symmetric square root and inverse square root with a relative eigenvalue floor."""
    w, V = np.linalg.eigh(gram)
    if w[0] < -_PSD_TOL * max(1.0, abs(w[-1])):
        raise SingularityError(f"Gram matrix is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    w = np.maximum(w, 1e-12 * w[-1])
    root = (V * np.sqrt(w)) @ V.T
    inv_root = (V / np.sqrt(w)) @ V.T
    return (root + root.T) / 2, (inv_root + inv_root.T) / 2


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _coef_array(coefs) -> np.ndarray:
    c = coefs.coefs if isinstance(coefs, CoefPanel) else np.asarray(coefs, dtype=float)
    if c.ndim != 3:
        raise DataError(f"coefficients must be 3-D (n, p, L), got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise DataError("coefficients contain non-finite values")
    return c


def fpca_fit(coefs, gram: Optional[np.ndarray] = None) -> FpcaModel:
    """Fit one FPCA per variable of ``coefs``.

    ``coefs`` is a :class:`CoefPanel` or a raw ``(n, p, L)`` array.  The Gram
    matrix defaults to that of the attached basis and is required for raw
    arrays.
    """
    c = _coef_array(coefs)
    n, p, L = c.shape
    if n < 2:
        raise InsufficientDataError(f"FPCA needs at least 2 samples, got {n}")
    basis: Optional[BasisSystem] = getattr(coefs, "basis", None)
    if gram is None:
        if basis is None:
            raise InvalidArgumentError("a Gram matrix is required for raw coefficient arrays")
        gram = basis.gram
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (L, L):
        raise DataError(f"Gram matrix shape {gram.shape} does not match L={L}")
    root, inv_root = _sym_sqrt(gram)

    means = c.mean(axis=0)
    eigvals = np.empty((p, L))
    eigfuns = np.empty((p, L, L))
    for j in range(p):
        centered = c[:, j, :] - means[j]
        cov = centered.T @ centered / (n - 1)
        S = root @ cov @ root
        S = (S + S.T) / 2
        lam, U = np.linalg.eigh(S)
        order = np.argsort(lam)[::-1]
        lam, U = lam[order], U[:, order]
        if lam[-1] < -_PSD_TOL * max(1.0, abs(lam[0])):
            raise SingularityError(f"covariance of variable {j} has a negative eigenvalue {lam[-1]:.3g}")
        eigvals[j] = np.maximum(lam, 0.0)
        eigfuns[j] = _fix_signs(inv_root @ U)
    loadings = np.einsum("kl,plm->pkm", gram, eigfuns)
    return FpcaModel(
        mean_coef=means,
        eigenvalues=eigvals,
        eigenfunctions=eigfuns,
        score_loadings=loadings,
        gram=gram,
        basis_descriptor=basis.descriptor() if basis is not None else None,
    )


def explained_variance_ratio(model: FpcaModel) -> np.ndarray:
    """Cumulative eigenvalue mass fraction, shape ``(p, L)``."""
    lam = model.eigenvalues
    total = lam.sum(axis=1, keepdims=True)
    if np.any(total <= 0):
        raise DegenerateDataError("a variable has zero total variance")
    return np.cumsum(lam, axis=1) / total


def choose_components(model: FpcaModel, ratio: float = 0.99) -> int:
    """Smallest shared ``M`` reaching ``ratio`` explained variance for every variable."""
    if not 0 < ratio <= 1:
        raise InvalidArgumentError(f"explained-variance ratio must be in (0, 1], got {ratio}")
    lam = model.eigenvalues
    if np.all(lam <= 0):
        raise DegenerateDataError("all eigenvalues are zero")
    total = lam.sum(axis=1, keepdims=True)
    # zero-variance variables impose no constraint
    cum = np.where(total > 0, np.cumsum(lam, axis=1) / np.where(total > 0, total, 1.0), 1.0)
    worst = cum.min(axis=0)
    # tolerate round-off when ratio == 1
    hits = np.nonzero(worst >= ratio - 1e-12)[0]
    return int(hits[0]) + 1 if hits.size else model.L


def transform(coefs, model: FpcaModel, M: int) -> ScorePanel:
    """Scores of the leading ``M`` eigenfunctions for each variable."""
    if M < 1 or M > model.L:
        raise InvalidArgumentError(f"M must lie in [1, {model.L}], got {M}")
    c = _coef_array(coefs)
    if c.shape[1:] != model.mean_coef.shape:
        raise DataError("coefficient panel does not match the FPCA model")
    centered = c - model.mean_coef[None]
    scores = np.einsum("npl,plm->npm", centered, model.score_loadings[:, :, :M])
    return ScorePanel(scores, model, getattr(coefs, "variable_names", None))


def inverse_transform(scores: ScorePanel, model: FpcaModel) -> np.ndarray:
    """Basis coefficients ``(n, p, L)`` rebuilt from truncated scores."""
    M = scores.M
    return model.mean_coef[None] + np.einsum(
        "npm,plm->npl", scores.scores, model.eigenfunctions[:, :, :M]
    )
