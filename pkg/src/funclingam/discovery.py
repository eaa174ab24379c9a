"""Causal-order discovery over functional principal component scores.

The search is the DirectLiNGAM greedy loop lifted to random vectors: at
each stage every remaining variable is scored by how dependent its
regression residuals are on it, the least dependent one is taken as
exogenous, and the others are replaced by their residuals on it.  Once the
order is fixed, each variable is regressed jointly on all its predecessors
to obtain the ``M x M`` connection blocks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .curves import CurvePanel, bspline_basis, fit_coefficients, fourier_basis
from .dependence import DEFAULT_SUBSAMPLE, get_measure
from .exceptions import (
    DataError,
    FuncLingamError,
    InvalidArgumentError,
    SingularityError,
    StageError,
)
from .fpca import ScorePanel, choose_components, fpca_fit, transform

__all__ = [
    "DiscoveryConfig",
    "CausalOrder",
    "BlockMatrix",
    "BinaryGraph",
    "DiscoveryReport",
    "ols_block",
    "residual",
    "exogeneity_score",
    "causal_order",
    "estimate_adjacency",
    "binarize",
    "operator_singular_values",
    "discover",
    "topological_order",
]


@dataclass(frozen=True)
class DiscoveryConfig:
    """Settings for :func:`discover`.

    ``ridge`` is relative: each regression adds ``ridge * mean(diag Cov(X))``
    to the predictor covariance.  Set ``M`` to bypass explained-variance
    selection.
    """

    basis: str = "bspline"
    L: int = 20
    order: int = 4
    evr: float = 0.99
    M: Optional[int] = None
    tau: float = 0.3
    ridge: float = 1e-8
    measure: str = "hsic"
    hsic_subsample: int = DEFAULT_SUBSAMPLE
    seed: int = 0

    def __post_init__(self):
        if self.basis not in ("bspline", "fourier"):
            raise InvalidArgumentError(f"unknown basis {self.basis!r}")
        if self.M is not None and self.M < 1:
            raise InvalidArgumentError(f"M must be positive, got {self.M}")
        if not 0 < self.evr <= 1:
            raise InvalidArgumentError(f"evr must be in (0, 1], got {self.evr}")
        if not self.tau > 0:
            raise InvalidArgumentError(f"tau must be positive, got {self.tau}")
        if self.ridge < 0:
            raise InvalidArgumentError(f"ridge must be non-negative, got {self.ridge}")
        if self.hsic_subsample < 4:
            raise InvalidArgumentError("hsic_subsample must be at least 4")
        get_measure(self.measure)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CausalOrder:
    """A permutation of variable indices, earliest cause first."""

    order: Tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(k) for k in self.order)
        if sorted(order) != list(range(len(order))):
            raise InvalidArgumentError(f"{order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def position(self) -> List[int]:
        """``position()[j]`` is the rank of variable ``j`` in the order."""
        pos = [0] * len(self.order)
        for rank, j in enumerate(self.order):
            pos[j] = rank
        return pos


@dataclass(frozen=True)
class BlockMatrix:
    """``blocks[i, j]`` is the ``M x M`` operator from variable ``j`` into ``i``."""

    blocks: np.ndarray

    @property
    def p(self) -> int:
        return self.blocks.shape[0]

    @property
    def M(self) -> int:
        return self.blocks.shape[2]

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.blocks**2, axis=(2, 3)))


@dataclass(frozen=True)
class BinaryGraph:
    """Adjacency where ``adjacency[i, j]`` means an edge ``j -> i``."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"adjacency must be square, got shape {a.shape}")
        if np.any(np.diag(a)):
            raise DataError("self-loops are not allowed")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> List[Tuple[int, int]]:
        """``(cause, effect)`` pairs in row-major order of the effect."""
        return [(int(j), int(i)) for i, j in zip(*np.nonzero(self.adjacency))]

    @classmethod
    def from_edges(cls, p: int, edges) -> "BinaryGraph":
        a = np.zeros((p, p), dtype=bool)
        for src, dst in edges:
            a[dst, src] = True
        return cls(a)

    @classmethod
    def chain(cls, p: int) -> "BinaryGraph":
        return cls.from_edges(p, [(k - 1, k) for k in range(1, p)])


@dataclass
class DiscoveryReport:
    order: CausalOrder
    blocks: BlockMatrix
    graph: BinaryGraph
    stages: List[dict]
    config: DiscoveryConfig
    M: int
    variable_names: Tuple[str, ...]
    explained_variance: Optional[List[float]] = None
    extra: Dict = field(default_factory=dict)

    @property
    def block_norms(self) -> np.ndarray:
        return self.blocks.norms()

    def to_dict(self) -> dict:
        names = list(self.variable_names)
        return {
            "variables": names,
            "order": list(self.order.order),
            "order_names": [names[k] for k in self.order.order],
            "M": self.M,
            "block_norms": self.block_norms.tolist(),
            "adjacency": self.graph.adjacency.astype(int).tolist(),
            "edges": [[names[s], names[d]] for s, d in self.graph.edges()],
            "stages": self.stages,
            "explained_variance": self.explained_variance,
            "config": self.config.to_dict(),
            **self.extra,
        }


def _check_centered(X: np.ndarray, tol: float = 1e-6):
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    if np.max(np.abs(X.mean(axis=0)), initial=0.0) > tol * scale:
        raise InvalidArgumentError("regressor columns must be centered")


def ols_block(Y, X, ridge: float = 0.0) -> np.ndarray:
    """Least-squares map ``T`` with ``Y ~ X T^T`` for centered samples.

    Returns ``Cov(Y, X) (Cov(X) + ridge I)^{-1}`` of shape ``(M, d)``; ``ridge``
    is absolute here.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if Y.shape[0] != n:
        raise InvalidArgumentError(f"row counts differ: {Y.shape[0]} vs {n}")
    if ridge < 0:
        raise InvalidArgumentError(f"ridge must be non-negative, got {ridge}")
    if ridge == 0 and n <= d:
        raise SingularityError(f"need more samples than predictors (n={n}, d={d}) without ridge")
    _check_centered(X)
    cxx = X.T @ X / n
    cyx = Y.T @ X / n
    A = cxx + ridge * np.eye(d)
    try:
        chol = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("predictor covariance is singular") from exc
    # condition check: Cholesky succeeds on some numerically singular matrices
    diag = np.diag(chol)
    if diag.min() <= 1e-12 * diag.max():
        raise SingularityError("predictor covariance is numerically singular")
    z = np.linalg.solve(chol, cyx.T)
    return np.linalg.solve(chol.T, z).T


def _relative_ridge(X: np.ndarray, ridge: float) -> float:
    if ridge == 0:
        return 0.0
    return ridge * float(np.mean(np.sum(X * X, axis=0) / X.shape[0]))


def residual(Y, X, ridge: float = 0.0) -> np.ndarray:
    """``Y - X T^T`` with ``T = ols_block(Y, X, ridge)``."""
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T = ols_block(Y, X, ridge)
    R = (Y[:, None] if Y.ndim == 1 else Y) - X @ T.T
    return R[:, 0] if Y.ndim == 1 else R


def _measure_fn(config: Optional[DiscoveryConfig]) -> Callable[[np.ndarray, np.ndarray], float]:
    config = config or DiscoveryConfig()
    fn = get_measure(config.measure)
    return lambda a, b: fn(a, b, subsample=config.hsic_subsample, seed=config.seed)


def _score_candidate(j, active, data, ridge, measure) -> Tuple[float, Dict[int, np.ndarray]]:
    xj = data[j]
    rel = _relative_ridge(xj, ridge)
    resids = {}
    terms = []
    for i in sorted(active):
        if i == j:
            continue
        r = residual(data[i], xj, rel)
        resids[i] = r
        terms.append(measure(xj, r))
    # fsum makes the total independent of enumeration order
    return math.fsum(terms), resids


def exogeneity_score(
    j: int, active: Sequence[int], scores, config: Optional[DiscoveryConfig] = None
) -> float:
    """Summed dependence between variable ``j`` and the residuals of the others on it.

    ``scores`` is a :class:`ScorePanel` or a mapping from variable index to an
    ``(n, M)`` centered sample matrix.
    """
    active = list(active)
    if j not in active:
        raise InvalidArgumentError(f"variable {j} is not active")
    if len(active) < 2:
        raise InvalidArgumentError("exogeneity needs at least two active variables")
    data = _as_data(scores)
    config = config or DiscoveryConfig()
    return _score_candidate(j, active, data, config.ridge, _measure_fn(config))[0]


def _as_data(scores) -> Dict[int, np.ndarray]:
    if isinstance(scores, ScorePanel):
        return {j: scores.variable(j) for j in range(scores.p)}
    if isinstance(scores, np.ndarray):
        return {j: scores[:, j, :] for j in range(scores.shape[1])}
    return dict(scores)


def causal_order(scores, config: Optional[DiscoveryConfig] = None) -> Tuple[CausalOrder, List[dict]]:
    """Greedy exogenous-first ordering.

    Returns the order and one record per stage with every candidate's score.
    Ties go to the lowest variable index.
    """
    config = config or DiscoveryConfig()
    measure = _measure_fn(config)
    data = {j: x - x.mean(axis=0) for j, x in _as_data(scores).items()}
    p = len(data)
    active = list(range(p))
    order: List[int] = []
    stages: List[dict] = []
    for stage in range(p - 1):
        try:
            results = {j: _score_candidate(j, active, data, config.ridge, measure) for j in active}
        except FuncLingamError as exc:
            raise StageError("causal_order", stage, exc) from exc
        best = min(active, key=lambda j: (results[j][0], j))
        stages.append(
            {
                "stage": stage,
                "candidates": {str(j): results[j][0] for j in active},
                "chosen": best,
            }
        )
        order.append(best)
        active.remove(best)
        for i, r in results[best][1].items():
            data[i] = r - r.mean(axis=0)
    order.extend(active)
    return CausalOrder(order), stages


def estimate_adjacency(scores, order: CausalOrder, ridge: float = 1e-8) -> BlockMatrix:
    """Joint least-squares blocks of each variable on all its predecessors."""
    data = {j: x - x.mean(axis=0) for j, x in _as_data(scores).items()}
    p = len(data)
    if len(order) != p:
        raise InvalidArgumentError(f"order has {len(order)} entries for {p} variables")
    if p == 0:
        return BlockMatrix(np.zeros((0, 0, 0, 0)))
    M = next(iter(data.values())).shape[1]
    blocks = np.zeros((p, p, M, M))
    seq = order.order
    for k in range(1, p):
        i = seq[k]
        preds = seq[:k]
        X = np.hstack([data[j] for j in preds])
        try:
            T = ols_block(data[i], X, _relative_ridge(X, ridge))
        except FuncLingamError as exc:
            raise StageError("estimate_adjacency", k, exc) from exc
        for slot, j in enumerate(preds):
            blocks[i, j] = T[:, slot * M:(slot + 1) * M]
    return BlockMatrix(blocks)


def binarize(blocks: BlockMatrix, tau: float) -> BinaryGraph:
    """Edge ``j -> i`` iff ``||T_ij||_F / sqrt(M) > tau``."""
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    if blocks.p == 0:
        return BinaryGraph(np.zeros((0, 0), dtype=bool))
    adj = blocks.norms() / math.sqrt(blocks.M) > tau
    np.fill_diagonal(adj, False)
    return BinaryGraph(adj)


def operator_singular_values(block) -> np.ndarray:
    """Singular values of an estimated operator block, descending."""
    block = np.asarray(block, dtype=float)
    if not np.all(np.isfinite(block)):
        raise DataError("block contains non-finite values")
    return np.linalg.svd(block, compute_uv=False)


def topological_order(graph: BinaryGraph) -> Optional[List[int]]:
    """Kahn's algorithm; None if the graph has a cycle."""
    a = graph.adjacency
    indeg = a.sum(axis=1).astype(int)
    ready = [i for i in range(graph.p) if indeg[i] == 0]
    out = []
    while ready:
        j = ready.pop(0)
        out.append(j)
        for i in np.nonzero(a[:, j])[0]:
            indeg[i] -= 1
            if indeg[i] == 0:
                ready.append(int(i))
    return out if len(out) == graph.p else None


def panel_scores(panel: CurvePanel, config: DiscoveryConfig):
    """Smooth, fit FPCA and return ``(scores, model, M)``."""
    if config.basis == "bspline":
        basis = bspline_basis(panel.grid, config.L, config.order)
    else:
        basis = fourier_basis(panel.grid, config.L)
    coefs = fit_coefficients(panel, basis)
    model = fpca_fit(coefs)
    M = config.M if config.M is not None else choose_components(model, config.evr)
    if M > basis.L:
        raise InvalidArgumentError(f"M={M} exceeds the basis dimension {basis.L}")
    return transform(coefs, model, M), model, M


def discover(panel: CurvePanel, config: Optional[DiscoveryConfig] = None) -> DiscoveryReport:
    """Run the full pipeline: smoothing, FPCA, ordering, blocks, thresholding."""
    config = config or DiscoveryConfig()
    try:
        scores, model, M = panel_scores(panel, config)
    except StageError:
        raise
    except FuncLingamError as exc:
        raise StageError("fpca", 0, exc) from exc
    if scores.n <= M:
        raise StageError("fpca", 0, InvalidArgumentError(f"need n > M (n={scores.n}, M={M})"))
    order, stages = causal_order(scores, config)
    blocks = estimate_adjacency(scores, order, config.ridge)
    graph = binarize(blocks, config.tau)
    lam = model.eigenvalues
    evr = (lam[:, :M].sum(axis=1) / lam.sum(axis=1)).tolist()
    return DiscoveryReport(
        order=order,
        blocks=blocks,
        graph=graph,
        stages=stages,
        config=config,
        M=M,
        variable_names=tuple(panel.variable_names),
        explained_variance=evr,
    )
