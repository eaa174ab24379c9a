"""Synthetic chain-structured functional data.

Each sample carries ``p`` coefficient vectors in R^5 linked by
``delta_1 = eps_1`` and ``delta_l = delta_{l-1} + eps_l``.  The innovations are
elementwise squares of standard normals (non-Gaussian) or plain standard
normals for the unidentifiable control.  Curves are ``phi(t)^T delta`` in the
five-function Fourier system, observed on an equidistant grid with additive
noise ``q^2``, ``q ~ N(0, 0.25)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from .curves import CurvePanel, build_time_grid, fourier_matrix
from .discovery import BinaryGraph, CausalOrder
from .exceptions import InvalidArgumentError

__all__ = [
    "SynthConfig",
    "GroundTruth",
    "squared_gaussian_vector",
    "generate",
    "simulate",
    "SynthDraw",
    "generate_bivariate_gaussian",
    "LAWS",
]

LAWS = ("squared", "gaussian")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 300
    p: int = 5
    w: int = 1000
    seed: int = 0
    coef_dim: int = 5
    noise_sd: float = 0.5
    law: str = "squared"
    graph: str = "chain"

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError(f"n must be >= 2, got {self.n}")
        if self.p < 2:
            raise InvalidArgumentError(f"p must be >= 2, got {self.p}")
        if self.w < 10:
            raise InvalidArgumentError(f"w must be >= 10, got {self.w}")
        if self.coef_dim < 1 or self.coef_dim % 2 == 0:
            raise InvalidArgumentError("coef_dim must be a positive odd integer (Fourier pairs)")
        if not self.noise_sd > 0:
            raise InvalidArgumentError("noise_sd must be positive")
        if self.law not in LAWS:
            raise InvalidArgumentError(f"law must be one of {LAWS}, got {self.law!r}")
        if self.graph not in ("chain", "random"):
            raise InvalidArgumentError(f"graph must be 'chain' or 'random', got {self.graph!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GroundTruth:
    graph: BinaryGraph
    order: CausalOrder
    block_law: str = "identity"

    def to_dict(self) -> dict:
        return {
            "adjacency": self.graph.adjacency.astype(int).tolist(),
            "edges": [list(e) for e in self.graph.edges()],
            "order": list(self.order.order),
            "block_law": self.block_law,
        }


def squared_gaussian_vector(d: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Elementwise squares of standard normals; ``size`` prepends sample axes."""
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    shape = (d,) if size is None else tuple(np.atleast_1d(size)) + (d,)
    return rng.standard_normal(shape) ** 2


def _innovations(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    shape = (cfg.n, cfg.p, cfg.coef_dim)
    if cfg.law == "squared":
        return rng.standard_normal(shape) ** 2
    return rng.standard_normal(shape)


def _random_lower_triangular(p: int, rng: np.random.Generator) -> np.ndarray:
    # experimental: each earlier variable is a parent with probability 1/2
    a = np.tril(rng.random((p, p)) < 0.5, k=-1)
    for i in range(1, p):
        if not a[i].any():
            a[i, i - 1] = True
    return a


@dataclass(frozen=True)
class SynthDraw:
    """Every intermediate of one generator call."""

    delta: np.ndarray  # (n, p, coef_dim) latent coefficients
    clean: np.ndarray  # (n, p, w) noise-free curves
    noise: np.ndarray  # (n, p, w) observation noise
    panel: CurvePanel
    truth: GroundTruth


def simulate(cfg: SynthConfig) -> SynthDraw:
    """Draw latent coefficients, curves and noise; bit-identical for a given config."""
    rng = np.random.default_rng(cfg.seed)
    eps = _innovations(cfg, rng)
    if cfg.graph == "chain":
        adj = BinaryGraph.chain(cfg.p).adjacency
    else:
        adj = _random_lower_triangular(cfg.p, rng)
    delta = np.empty_like(eps)
    for l in range(cfg.p):
        parents = np.nonzero(adj[l])[0]
        delta[:, l] = eps[:, l] + delta[:, parents].sum(axis=1)
    grid = build_time_grid(cfg.w)
    phi = fourier_matrix(grid.points, cfg.coef_dim)
    clean = delta @ phi.T
    noise = (cfg.noise_sd * rng.standard_normal(clean.shape)) ** 2
    panel = CurvePanel(clean + noise, grid, [f"f{j + 1}" for j in range(cfg.p)])
    truth = GroundTruth(BinaryGraph(adj), CausalOrder(range(cfg.p)))
    return SynthDraw(delta, clean, noise, panel, truth)


def generate(cfg: SynthConfig) -> Tuple[CurvePanel, GroundTruth]:
    """Observed panel and ground truth for ``cfg``."""
    draw = simulate(cfg)
    return draw.panel, draw.truth


def generate_bivariate_gaussian(cfg: SynthConfig) -> Tuple[CurvePanel, GroundTruth]:
    """Two-variable chain with jointly Gaussian coefficients."""
    if cfg.p != 2:
        raise InvalidArgumentError(f"the Gaussian control is bivariate, got p={cfg.p}")
    return generate(SynthConfig(**{**cfg.to_dict(), "law": "gaussian"}))
