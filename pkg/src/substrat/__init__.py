"""Numerical toolkit for sub-Laplacian spectral calculus on 2-step
stratified groups: Mehler heat kernels, oscillatory kernel integrals with
stationary-phase certification, Bernoulli-Hankel positivity, and the
Laguerre multiplier-kernel formula with its smoothness-threshold bound."""

from .groups import (
    StratifiedGroup,
    build_group,
    builtin_group,
    dual_inner,
    free2step,
    group_dimensions,
    group_from_file,
    heisenberg,
    htype,
    j_matrix,
    j_matrix_raw,
    parse_builtin,
    rotation_family,
)
from .spectral import (
    SpectralDecomposition,
    decompose,
    generic_eigencount,
    spectral_apply,
    srdet_hS,
)
from .bernoulli import BernoulliCoefficient, bernoulli_b, hankel_det, zeta_series_det

__all__ = [
    "StratifiedGroup",
    "SpectralDecomposition",
    "BernoulliCoefficient",
    "build_group",
    "builtin_group",
    "parse_builtin",
    "group_from_file",
    "heisenberg",
    "htype",
    "free2step",
    "rotation_family",
    "j_matrix",
    "j_matrix_raw",
    "group_dimensions",
    "dual_inner",
    "decompose",
    "generic_eigencount",
    "spectral_apply",
    "srdet_hS",
    "bernoulli_b",
    "hankel_det",
    "zeta_series_det",
]

__version__ = "0.1.0"
