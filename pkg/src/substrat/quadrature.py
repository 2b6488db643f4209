"""Gauss-Legendre tensor grids shared by the integral-evaluating modules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=128)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def tensor_grid(bounds, nodes_per_axis: int):
    """Tensor-product Gauss-Legendre grid over a box.

    bounds is a sequence of (a, b) pairs; returns points of shape (N, d)
    and weights of shape (N,).
    """
    axes = [gauss_legendre(nodes_per_axis, a, b) for a, b in bounds]
    grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    pts = np.stack([grid.ravel() for grid in grids], axis=-1)
    wts = np.ones(1)
    for _, w in axes:
        wts = np.outer(wts, w).ravel()
    return pts, wts


@dataclass(frozen=True)
class QuadratureGrid:
    """Parameters of the dual-variable quadrature used by heat_space.

    half_width None lets the caller's module pick a box from the integrand's
    decay envelope.  When tolerance is set the integral is recomputed on a
    refined grid and GridTooCoarse is raised if the two disagree beyond it.
    """

    half_width: float | None = None
    nodes_per_axis: int = 128
    tolerance: float | None = None
