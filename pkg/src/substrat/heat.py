"""Mehler-type heat kernel: partial Fourier transform and spatial synthesis.

For Re z > 0 the mu-section of the kernel of exp(-z L) is

    p_z^mu(x) = (4 pi z)^(-d1/2) srdet_hS(z J_mu) exp(-<ht(z J_mu) x, x>/(4z)),

with all roots on the principal branch; the spatial kernel follows by
inverting the partial Fourier transform over the second layer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BranchRegionViolated, GridTooCoarse, InvalidTime
from .groups import StratifiedGroup, j_matrix_batch
from .quadrature import QuadratureGrid, tensor_grid
from .spectral import hs, ht

ENVELOPE_TAIL = 1e-12


@dataclass(frozen=True)
class HeatQuery:
    """Evaluation point of the partial Fourier transform of p_z."""

    z: complex
    mu: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        if complex(self.z).real <= 0.0:
            raise InvalidTime(f"Re z = {complex(self.z).real} must be positive")


def _batch_partial_ft(g: StratifiedGroup, z: complex, mus: np.ndarray,
                      x: np.ndarray) -> np.ndarray:
    """p_z^mu(x) for a batch of dual vectors, shape (n, d2) -> (n,)."""
    z = complex(z)
    jm = j_matrix_batch(g, mus)
    a = jm @ np.swapaxes(jm, -1, -2)  # J J^T = -J^2 for skew J
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    w, v = np.linalg.eigh(a)
    b = np.sqrt(np.clip(w, 0.0, None))
    bmax = float(b.max(initial=0.0))
    if abs(z.imag) * bmax >= np.pi:
        raise BranchRegionViolated(
            f"||Im(z) J_mu|| = {abs(z.imag) * bmax:.6g} >= pi")
    # one hs factor per eigenvalue pair of the skew matrix
    b_desc = b[:, ::-1]
    srdet = np.prod(hs(1j * z * b_desc[:, ::2].astype(complex)), axis=1)
    coeff = np.einsum("k,nki->ni", x, v) ** 2
    quad = np.sum(ht(1j * z * b.astype(complex)) * coeff, axis=1)
    prefactor = np.exp(-(g.d1 / 2.0) * np.log(4.0 * np.pi * z))
    return prefactor * srdet * np.exp(-quad / (4.0 * z))


def heat_partial_ft(g: StratifiedGroup, q: HeatQuery) -> complex:
    """Evaluate the Mehler formula at a single (z, mu, x)."""
    mu = np.asarray(q.mu, dtype=float).reshape(1, g.d2)
    x = np.asarray(q.x, dtype=float).reshape(g.d1)
    return complex(_batch_partial_ft(g, q.z, mu, x)[0])


def _auto_halfwidth(g: StratifiedGroup, z: complex, tail: float = ENVELOPE_TAIL
                    ) -> float:
    """Box half-width making the integrand envelope drop below `tail`.

    Doubles R until |p_z^mu(0)| along every dual axis direction is below
    tail relative to the mu = 0 value; the envelope decreases along rays,
    so axis maxima with a 25% margin bound the box.
    """
    z = complex(z)
    base = abs(np.exp(-(g.d1 / 2.0) * np.log(4.0 * np.pi * z)))
    dirs = np.concatenate([np.eye(g.d2), -np.eye(g.d2)], axis=0)
    x0 = np.zeros(g.d1)

    def _envelope(r):
        return float(np.abs(_batch_partial_ft(g, z, r * dirs, x0)).max())

    r = 1.0
    for _ in range(40):
        if _envelope(r) <= tail * base:
            break
        r *= 2.0
    else:
        return r
    lo, hi = r / 2.0, r
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        if _envelope(mid) <= tail * base:
            hi = mid
        else:
            lo = mid
    return 1.1 * hi


def heat_space(g: StratifiedGroup, z: complex, x, u,
               grid: QuadratureGrid | None = None) -> complex:
    """Spatial heat kernel p_z(x, u) by tensor Gauss-Legendre in mu.

    (2 pi)^(-d2) integral of p_z^mu(x) e^{i <mu, u>} over a box chosen from
    the Gaussian-type decay of the integrand.  When grid.tolerance is set,
    the value is recomputed with doubled nodes per axis; a relative
    discrepancy above the tolerance raises GridTooCoarse and otherwise the
    refined value is returned.
    """
    vals = heat_space_lattice(g, z, np.asarray(x, dtype=float).reshape(1, -1),
                              np.asarray(u, dtype=float).reshape(1, -1), grid)
    return complex(vals[0, 0])


def heat_space_lattice(g: StratifiedGroup, z: complex, xs, us,
                       grid: QuadratureGrid | None = None) -> np.ndarray:
    """p_z on a product of first-layer points xs and central points us.

    Shares the mu-quadrature (and its eigendecompositions) across all
    evaluation points; returns an (len(xs), len(us)) complex array.
    """
    z = complex(z)
    if z.real <= 0.0:
        raise InvalidTime(f"Re z = {z.real} must be positive")
    if z.real < 0.1 * abs(z.imag):
        warnings.warn("heat_space accuracy degrades for Re z << |Im z|; "
                      "no oscillatory acceleration is applied",
                      RuntimeWarning, stacklevel=2)
    grid = grid or QuadratureGrid()
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    if xs.shape[1] != g.d1 or us.shape[1] != g.d2:
        raise ValueError("xs and us must have d1 and d2 columns")
    half = grid.half_width if grid.half_width is not None else _auto_halfwidth(g, z)
    # Resolve both the phase e^{i<mu,u>} and the x-sharpened Gaussian factor:
    # their mu-variation rate is about |u| + ||J|| |x|^2 / (4 |z|), and the
    # rule of thumb is two nodes per unit of (rate * box width).
    umax = float(np.max(np.abs(us))) if us.size else 0.0
    xmax_sq = float(np.max(np.einsum("xi,xi->x", xs, xs))) if xs.size else 0.0
    rate = umax + g.j_opnorm_bound() * xmax_sq / (4.0 * abs(z))
    nodes = max(grid.nodes_per_axis, int(np.ceil(2.0 * half * rate)) + 16)

    def _eval(n_axis: int) -> np.ndarray:
        pts, wts = tensor_grid([(-half, half)] * g.d2, n_axis)
        jm = j_matrix_batch(g, pts)
        a = jm @ np.swapaxes(jm, -1, -2)
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        w, v = np.linalg.eigh(a)
        b = np.sqrt(np.clip(w, 0.0, None))
        if abs(z.imag) * float(b.max(initial=0.0)) >= np.pi:
            raise BranchRegionViolated("||Im(z) J_mu|| >= pi inside the grid box")
        srdet = np.prod(hs(1j * z * b[:, ::-1][:, ::2].astype(complex)), axis=1)
        ht_vals = ht(1j * z * b.astype(complex))
        coeff = np.einsum("xk,nki->nxi", xs, v) ** 2
        quad = np.einsum("ni,nxi->nx", ht_vals, coeff)
        prefactor = np.exp(-(g.d1 / 2.0) * np.log(4.0 * np.pi * z))
        p_vals = prefactor * srdet[:, None] * np.exp(-quad / (4.0 * z))
        phases = np.exp(1j * pts @ us.T)
        out = np.einsum("n,nx,nu->xu", wts, p_vals, phases)
        return out / (2.0 * np.pi) ** g.d2

    result = _eval(nodes)
    if grid.tolerance is not None:
        refined = _eval(2 * nodes)
        scale = max(float(np.max(np.abs(refined))), 1e-300)
        err = float(np.max(np.abs(refined - result))) / scale
        if err > grid.tolerance:
            raise GridTooCoarse(
                f"self-convergence estimate {err:.3e} exceeds tolerance "
                f"{grid.tolerance:.3e}")
        return refined
    return result
