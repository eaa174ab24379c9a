"""Causal-order discovery among functional variables.

Curves are smoothed onto a basis, reduced to functional principal component
scores, and ordered by a greedy residual-independence search.
"""

from .curves import (
    BasisSystem,
    CoefPanel,
    CurvePanel,
    TimeGrid,
    bspline_basis,
    build_time_grid,
    fit_coefficients,
    fourier_basis,
    reconstruct,
)
from .dependence import hsic, hsic_pvalue, median_bandwidth
from .discovery import (
    BinaryGraph,
    BlockMatrix,
    CausalOrder,
    DiscoveryConfig,
    DiscoveryReport,
    binarize,
    causal_order,
    discover,
    estimate_adjacency,
    exogeneity_score,
    ols_block,
    operator_singular_values,
    residual,
)
from .exceptions import (
    DataError,
    DegenerateDataError,
    FuncLingamError,
    InsufficientDataError,
    InvalidArgumentError,
    SingularityError,
    StageError,
)
from .fpca import FpcaModel, ScorePanel, choose_components, fpca_fit, transform
from .metrics import benchmark, confusion, evaluate, gaussianity_scan, shd
from .synthgen import GroundTruth, SynthConfig, generate, generate_bivariate_gaussian

__version__ = "0.1.0"

__all__ = [
    "BasisSystem",
    "BinaryGraph",
    "BlockMatrix",
    "CausalOrder",
    "CoefPanel",
    "CurvePanel",
    "DataError",
    "DegenerateDataError",
    "DiscoveryConfig",
    "DiscoveryReport",
    "FpcaModel",
    "FuncLingamError",
    "GroundTruth",
    "InsufficientDataError",
    "InvalidArgumentError",
    "ScorePanel",
    "SingularityError",
    "StageError",
    "SynthConfig",
    "TimeGrid",
    "benchmark",
    "binarize",
    "bspline_basis",
    "build_time_grid",
    "causal_order",
    "choose_components",
    "confusion",
    "discover",
    "estimate_adjacency",
    "evaluate",
    "exogeneity_score",
    "fit_coefficients",
    "fourier_basis",
    "fpca_fit",
    "gaussianity_scan",
    "generate",
    "generate_bivariate_gaussian",
    "hsic",
    "hsic_pvalue",
    "median_bandwidth",
    "ols_block",
    "operator_singular_values",
    "reconstruct",
    "residual",
    "shd",
    "transform",
]
