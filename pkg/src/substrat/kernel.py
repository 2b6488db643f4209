"""Laguerre-series kernel formula, spatial synthesis, and the smoothness
threshold bound.

For compactly supported F the Euclidean Fourier transform of the kernel of
F(L) is the finite sum

    sum_{n in N^M} F(sum_j (2 n_j + r_j) b_j + |P_0 xi|^2)
        prod_j ell_{n_j}^{(r_j - 1)}(|P_j xi|^2 / b_j),

with ell_m^{(k)}(t) = 2^{k+1} (-1)^m e^{-t} L_m^{(k)}(2t); the threshold
bound Q/2 - 1/(2 h_0) comes from the degree h of a square-free homogeneous
polynomial vanishing on the eigenvalue-degeneracy locus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

from .errors import DegreeInconsistent, GridTooCoarse, NonGenericMu
from .groups import StratifiedGroup, j_matrix
from .spectral import decompose, generic_eigencount

DEFAULT_CLUSTER_TOL = 1e-8
_PATTERN_SEED = 2024
_ROOT_CLUSTER_TOL = 0.08


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSpec:
    """Compactly supported multiplier: evaluator vanishes outside
    [0, support_bound] (enforced on call)."""

    evaluator: object
    support_bound: float
    name: str = ""

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        vals = np.asarray(self.evaluator(lam), dtype=complex)
        mask = (lam >= 0.0) & (lam <= self.support_bound)
        out = np.where(mask, vals, 0.0)
        return out if out.shape else complex(out)


def _smooth_step_down(x):
    """1 for x <= 0, 0 for x >= 1, C^inf monotone in between."""
    x = np.asarray(x, dtype=float)
    def h(t):
        out = np.zeros_like(t)
        pos = t > 0.0
        out[pos] = np.exp(-1.0 / t[pos])
        return out
    num = h(1.0 - x)
    return num / (num + h(np.asarray(x, dtype=float)))


def heatcap_multiplier(z: float = 1.0, kmax: float = 40.0) -> MultiplierSpec:
    """exp(-z lam) smoothly capped to vanish beyond kmax."""
    a = 0.8 * kmax

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(-z * lam) * _smooth_step_down((lam - a) / (kmax - a))

    return MultiplierSpec(evaluator=f, support_bound=kmax, name=f"heatcap:{z},{kmax}")


def bump_multiplier(a: float, b: float) -> MultiplierSpec:
    """Standard bump supported on [a, b] (subset of [0, inf))."""
    if not 0.0 <= a < b:
        raise ValueError("need 0 <= a < b")
    center, radius = 0.5 * (a + b), 0.5 * (b - a)

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        r2 = ((lam - center) / radius) ** 2
        out = np.zeros_like(lam)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    return MultiplierSpec(evaluator=f, support_bound=b, name=f"bump:{a},{b}")


def table_multiplier(path) -> MultiplierSpec:
    """Piecewise-linear multiplier from a two-column CSV (lambda, value)."""
    data = np.loadtxt(path, delimiter=",", dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("table file must have two columns")
    lams, vals = data[:, 0], data[:, 1]
    if np.any(np.diff(lams) <= 0):
        raise ValueError("table abscissae must increase")

    def f(lam):
        return np.interp(np.asarray(lam, dtype=float), lams, vals,
                         left=0.0, right=0.0)

    return MultiplierSpec(evaluator=f, support_bound=float(lams[-1]),
                          name=f"table:{path}")


# ---------------------------------------------------------------------------
# Laguerre factors
# ---------------------------------------------------------------------------

def laguerre_ell_table(mmax: int, k: int, t) -> np.ndarray:
    """ell_m^{(k)}(t) for m = 0..mmax by the three-term recurrence in m.

    t may be an array; the result has shape (mmax + 1,) + t.shape.
    """
    t = np.asarray(t, dtype=float)
    x = 2.0 * t
    out = np.empty((mmax + 1,) + t.shape)
    damp = np.exp(-t)
    l_prev = np.ones_like(x)
    out[0] = 2.0 ** (k + 1) * damp * l_prev
    if mmax == 0:
        return out
    l_cur = 1.0 + k - x
    out[1] = -(2.0 ** (k + 1)) * damp * l_cur
    for m in range(1, mmax):
        l_next = ((2 * m + k + 1 - x) * l_cur - (m + k) * l_prev) / (m + 1)
        l_prev, l_cur = l_cur, l_next
        out[m + 1] = 2.0 ** (k + 1) * (-1.0) ** (m + 1) * damp * l_cur
    return out


def laguerre_ell(m: int, k: int, t):
    """ell_m^{(k)}(t) = 2^{k+1} (-1)^m e^{-t} L_m^{(k)}(2t)."""
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    vals = laguerre_ell_table(m, k, t)[m]
    return vals if np.ndim(t) else float(vals)


# ---------------------------------------------------------------------------
# kernel Fourier transform
# ---------------------------------------------------------------------------

def _strict_gap_check(dec, cluster_tol):
    b = dec.eigenvalues
    if b.size < 2:
        return
    gaps = b[:-1] - b[1:]
    if float(np.min(gaps)) < 10.0 * cluster_tol * float(b[0]):
        raise NonGenericMu(
            "eigenvalue clusters closer than 10x cluster tolerance; "
            "use lenient mode to merge")


def kernel_ft(g: StratifiedGroup, F: MultiplierSpec, xi, mu,
              trunc_tol: float = 0.0, strict: bool = False,
              cluster_tol: float = DEFAULT_CLUSTER_TOL) -> complex:
    """Fourier transform of the kernel of F(L) at (xi, mu).

    The lattice sum is exactly finite: tuples whose energy exceeds the
    multiplier support (plus trunc_tol slack) are pruned.  mu = 0 falls back
    to the Euclidean functional calculus F(|xi|^2).
    """
    xi = np.asarray(xi, dtype=float).reshape(g.d1)
    vals = kernel_ft_lattice(g, F, xi.reshape(1, -1), mu,
                             trunc_tol=trunc_tol, strict=strict,
                             cluster_tol=cluster_tol)
    return complex(vals[0])


def kernel_ft_lattice(g: StratifiedGroup, F: MultiplierSpec, xi_pts, mu,
                      trunc_tol: float = 0.0, strict: bool = False,
                      cluster_tol: float = DEFAULT_CLUSTER_TOL) -> np.ndarray:
    """kernel_ft over an array of xi points (shared decomposition at mu)."""
    xi_pts = np.atleast_2d(np.asarray(xi_pts, dtype=float))
    dec = decompose(g, mu, cluster_tol)
    if strict:
        _strict_gap_check(dec, cluster_tol)
    if dec.M == 0:
        return np.asarray(F(np.einsum("xi,xi->x", xi_pts, xi_pts)),
                          dtype=complex)

    b = dec.eigenvalues
    ranks = dec.ranks
    p0_sq = np.einsum("xi,xi->x", xi_pts @ dec.kernel_projection,
                      xi_pts @ dec.kernel_projection)
    base_energy = float(np.sum(ranks * b))
    budget = F.support_bound + trunc_tol

    # one Laguerre table per eigenvalue cluster
    tables = []
    n_caps = []
    for j in range(dec.M):
        pj_sq = np.einsum("xi,xi->x", xi_pts @ dec.projections[j],
                          xi_pts @ dec.projections[j])
        n_cap = max(int(np.floor((budget - base_energy) / (2.0 * b[j]))), -1)
        n_caps.append(n_cap)
        if n_cap >= 0:
            tables.append(laguerre_ell_table(n_cap, int(ranks[j]) - 1,
                                             pj_sq / b[j]))
        else:
            tables.append(None)

    out = np.zeros(xi_pts.shape[0], dtype=complex)
    if any(tab is None for tab in tables):
        return out

    def recurse(j, energy, factor):
        if j == dec.M:
            out_local = F(energy + p0_sq) * factor
            np.add(out, out_local, out=out)
            return
        n = 0
        while energy + 2.0 * n * b[j] <= budget:
            recurse(j + 1, energy + 2.0 * n * b[j], factor * tables[j][n])
            n += 1

    recurse(0, base_energy, np.ones(xi_pts.shape[0]))
    return out


# ---------------------------------------------------------------------------
# spatial synthesis via inverse FFT
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelGrid:
    """Sampling lattice for kernel_space: per-axis half-widths and even
    point counts for the first-layer and central frequency variables."""

    xi_half_width: float = 8.0
    mu_half_width: float = 40.0
    n_xi: int = 64
    n_mu: int = 96
    tolerance: float | None = None


def _centered_lattice(half_width: float, n: int) -> np.ndarray:
    if n % 2 != 0:
        raise ValueError("lattice sizes must be even")
    delta = 2.0 * half_width / n
    return (np.arange(n) - n // 2) * delta


def _centered_inverse_ft(values: np.ndarray, deltas) -> np.ndarray:
    """Inverse Fourier transform between centered lattices.

    values[k1, ..., kd] sits at frequency (k - n/2) delta per axis; the
    output sits at x_m = (m - n/2) (2 pi / (n delta)) and approximates
    (2 pi)^{-d} int V e^{i <xi, x>} d xi.
    """
    out = values.astype(complex)
    scale = 1.0
    for axis, delta in enumerate(deltas):
        n = values.shape[axis]
        sign = (-1.0) ** np.arange(n)
        shape = [1] * values.ndim
        shape[axis] = n
        out = out * sign.reshape(shape)
        scale *= (-1.0) ** (n // 2) * n * delta / (2.0 * np.pi)
    out = np.fft.ifftn(out)
    for axis in range(values.ndim):
        n = values.shape[axis]
        sign = (-1.0) ** np.arange(n)
        shape = [1] * values.ndim
        shape[axis] = n
        out = out * sign.reshape(shape)
    return out * scale


@dataclass(frozen=True)
class KernelSpaceResult:
    x_axes: list
    u_axes: list
    values: np.ndarray
    convergence_estimate: float | None = None


def kernel_space(g: StratifiedGroup, F: MultiplierSpec,
                 grid: KernelGrid | None = None) -> KernelSpaceResult:
    """Spatial kernel of F(L) by inverse FFT of kernel_ft on a lattice.

    Doubling the lattice (same half-widths) keeps the spatial spacing and
    extends the range, so the self-convergence estimate compares values on
    the common sublattice; it is computed when grid.tolerance is set, and
    GridTooCoarse is raised when it exceeds the tolerance.
    """
    grid = grid or KernelGrid()

    def _eval(n_xi, n_mu):
        xi_axis = _centered_lattice(grid.xi_half_width, n_xi)
        mu_axis = _centered_lattice(grid.mu_half_width, n_mu)
        xi_grids = np.meshgrid(*([xi_axis] * g.d1), indexing="ij")
        xi_pts = np.stack([a.ravel() for a in xi_grids], axis=-1)
        shape = (n_xi,) * g.d1 + (n_mu,) * g.d2
        vals = np.empty(shape, dtype=complex)
        for idx in _iproduct(range(n_mu), repeat=g.d2):
            mu = np.array([mu_axis[i] for i in idx])
            slab = kernel_ft_lattice(g, F, xi_pts, mu)
            vals[(Ellipsis,) + idx] = slab.reshape((n_xi,) * g.d1)
        deltas = [2.0 * grid.xi_half_width / n_xi] * g.d1 \
            + [2.0 * grid.mu_half_width / n_mu] * g.d2
        out = _centered_inverse_ft(vals, deltas)
        x_axis = np.arange(-n_xi // 2, n_xi // 2) * (np.pi / grid.xi_half_width)
        u_axis = np.arange(-n_mu // 2, n_mu // 2) * (np.pi / grid.mu_half_width)
        return out, [x_axis] * g.d1, [u_axis] * g.d2

    values, x_axes, u_axes = _eval(grid.n_xi, grid.n_mu)
    estimate = None
    if grid.tolerance is not None:
        fine, _, _ = _eval(2 * grid.n_xi, 2 * grid.n_mu)
        # common points: coarse index m maps to fine index m + n/2 per axis
        slices = tuple(slice(n // 2, n // 2 + n)
                       for n in (grid.n_xi,) * g.d1 + (grid.n_mu,) * g.d2)
        overlap = fine[slices]
        scale = max(float(np.max(np.abs(overlap))), 1e-300)
        estimate = float(np.max(np.abs(values - overlap))) / scale
        if estimate > grid.tolerance:
            raise GridTooCoarse(
                f"self-convergence estimate {estimate:.3e} exceeds "
                f"tolerance {grid.tolerance:.3e}")
        values = fine[slices]
    return KernelSpaceResult(x_axes=x_axes, u_axes=u_axes, values=values,
                             convergence_estimate=estimate)


# ---------------------------------------------------------------------------
# degeneracy polynomial and the threshold bound
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _reference_pattern(g: StratifiedGroup):
    """Generic multiplicity pattern: cluster sizes (descending eigenvalue
    order) and the kernel dimension, from seeded random directions."""
    rng = np.random.default_rng(_PATTERN_SEED)
    target = generic_eigencount(g)
    for _ in range(128):
        mu = rng.standard_normal(g.d2)
        norm = float(np.linalg.norm(mu))
        if norm == 0.0:
            continue
        dec = decompose(g, mu / norm)
        if dec.distinct_count == target:
            sizes = tuple(2 * int(r) for r in dec.ranks)
            return sizes, int(dec.kernel_rank)
    raise NonGenericMu("could not sample a generic direction for the pattern")


def eigen_symmetric_poly(g: StratifiedGroup, mu) -> float:
    """D(mu) = prod_j b_j^2 prod_{i<j} (b_i^2 - b_j^2)^2 over the generic
    reference slots (eigenvalues of -J_mu^2 sorted descending and averaged
    within each slot), a polynomial in mu vanishing exactly where the
    generic eigenvalue pattern degenerates."""
    sizes, _ = _reference_pattern(g)
    jm = j_matrix(g, mu)
    lam = np.linalg.eigvalsh(-jm @ jm)[::-1]
    means = []
    pos = 0
    for s in sizes:
        means.append(float(np.mean(lam[pos:pos + s])))
        pos += s
    d_val = 1.0
    for m in means:
        d_val *= m
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            d_val *= (means[i] - means[j]) ** 2
    return d_val


def _cluster_roots(roots: np.ndarray) -> int:
    scale = max(1.0, float(np.max(np.abs(roots))) if roots.size else 1.0)
    tol = _ROOT_CLUSTER_TOL * scale
    centers = []
    for r in roots:
        for idx, c in enumerate(centers):
            if abs(r - c[0] / c[1]) <= tol:
                centers[idx] = (c[0] + r, c[1] + 1)
                break
        else:
            centers.append((r, 1))
    return len(centers)


def homogeneity_degree(g: StratifiedGroup, seed: int = 0, directions: int = 10,
                       lines: int = 10) -> int:
    """Degree h of the square-free radical of the degeneracy polynomial.

    deg D is fitted as the (integral, direction-independent) log-log slope
    along rays; the radical degree is the distinct-complex-root count of
    exact-degree polynomial interpolants of D along random lines, which must
    agree across all lines.
    """
    rng = np.random.default_rng(seed)
    lams = np.array([1.0, 2.0, 4.0, 8.0])
    slopes = []
    for _ in range(directions):
        for _ in range(64):
            mu = rng.standard_normal(g.d2)
            norm = float(np.linalg.norm(mu))
            if norm > 0:
                mu /= norm
                if abs(eigen_symmetric_poly(g, mu)) > 1e-12:
                    break
        else:
            raise DegreeInconsistent("could not sample a nondegenerate direction")
        vals = np.array([abs(eigen_symmetric_poly(g, lam * mu)) for lam in lams])
        slope = float(np.polyfit(np.log(lams), np.log(vals), 1)[0])
        if abs(slope - round(slope)) > 1e-6:
            raise DegreeInconsistent(f"non-integral degree slope {slope}")
        slopes.append(round(slope))
    if len(set(slopes)) != 1:
        raise DegreeInconsistent(f"direction-dependent degrees {sorted(set(slopes))}")
    n_deg = slopes[0]
    if n_deg == 0:
        raise DegreeInconsistent("degeneracy polynomial is constant")
    if n_deg > 24:
        raise DegreeInconsistent(f"degree {n_deg} too large for line interpolation")

    counts = []
    ts = np.cos(np.pi * (2 * np.arange(n_deg + 7) + 1) / (2 * (n_deg + 7))) * 2.0
    for _ in range(lines):
        a = rng.standard_normal(g.d2)
        a /= np.linalg.norm(a)
        bdir = rng.standard_normal(g.d2)
        bdir /= np.linalg.norm(bdir)
        vals = np.array([eigen_symmetric_poly(g, a + t * bdir) for t in ts])
        scale = float(np.max(np.abs(vals)))
        if scale <= 0.0:
            raise DegreeInconsistent("line sample identically zero")
        coeffs = np.polynomial.polynomial.polyfit(ts, vals / scale, n_deg)
        if abs(coeffs[-1]) < 1e-8 * float(np.max(np.abs(coeffs))):
            raise DegreeInconsistent("line restriction drops degree")
        roots = np.polynomial.polynomial.polyroots(coeffs)
        counts.append(_cluster_roots(roots))
    if len(set(counts)) != 1:
        raise DegreeInconsistent(f"line-dependent root counts {sorted(set(counts))}")
    return counts[0]


@dataclass(frozen=True)
class ThresholdReport:
    h: int
    h0: int
    bound: float
    sample_check: dict = field(default_factory=dict)


def _slot_spectral_data(g, mu, sizes, kernel_dim):
    jm = j_matrix(g, mu)
    a = -jm @ jm
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    order = np.argsort(np.sqrt(np.clip(w, 0.0, None)))[::-1]
    b_sorted = np.sqrt(np.clip(w, 0.0, None))[order]
    v_sorted = v[:, order]
    bs, projs = [], []
    pos = 0
    for s in sizes:
        bs.append(float(np.mean(b_sorted[pos:pos + s])))
        block = v_sorted[:, pos:pos + s]
        projs.append(block @ block.T)
        pos += s
    block = v_sorted[:, pos:]
    projs.append(block @ block.T)  # kernel projection last
    return np.array(bs), projs


def threshold_report(g: StratifiedGroup, h: int | None = None,
                     samples: int = 200, seed: int = 0) -> ThresholdReport:
    """Bound Q/2 - 1/(2 h0) plus sampled derivative-estimate statistics.

    On random unit generic directions the ratios |d b_j / b_j| * H(mu) and
    ||d P_j|| * H(mu) are collected against the sup-normalized candidate
    H = |D|^{h / deg D}; their maxima are the fitted constants.
    """
    if h is None:
        h = homogeneity_degree(g, seed=seed)
    if h < 0:
        raise ValueError("h must be a nonnegative integer")
    h0 = max(int(h), 1)
    bound = g.Q / 2.0 - 1.0 / (2.0 * h0)

    sizes, kernel_dim = _reference_pattern(g)
    n_deg = 2 * len(sizes) ** 2
    rng = np.random.default_rng(seed)
    step = 1e-5
    mus, cands, ratios_b, ratios_p = [], [], [], []
    attempts = 0
    while len(mus) < samples and attempts < 50 * samples:
        attempts += 1
        mu = rng.standard_normal(g.d2)
        norm = float(np.linalg.norm(mu))
        if norm == 0.0:
            continue
        mu /= norm
        d_val = abs(eigen_symmetric_poly(g, mu))
        if d_val <= 1e-14:
            continue
        b0, _ = _slot_spectral_data(g, mu, sizes, kernel_dim)
        max_b_ratio = 0.0
        max_p_norm = 0.0
        for k in range(g.d2):
            e = np.zeros(g.d2)
            e[k] = step
            b_plus, p_plus = _slot_spectral_data(g, mu + e, sizes, kernel_dim)
            b_minus, p_minus = _slot_spectral_data(g, mu - e, sizes, kernel_dim)
            db = (b_plus - b_minus) / (2.0 * step)
            max_b_ratio = max(max_b_ratio, float(np.max(np.abs(db) / b0)))
            for pp, pm in zip(p_plus, p_minus):
                dp = np.linalg.norm((pp - pm) / (2.0 * step), 2)
                max_p_norm = max(max_p_norm, float(dp))
        mus.append(mu)
        cands.append(d_val ** (h / n_deg))
        ratios_b.append(max_b_ratio)
        ratios_p.append(max_p_norm)
    if len(mus) < samples:
        raise NonGenericMu("could not draw enough generic directions")

    cands = np.array(cands)
    h_tilde = cands / float(np.max(cands))  # sup-normalized on the sphere
    const_b = float(np.max(np.array(ratios_b) * h_tilde))
    const_p = float(np.max(np.array(ratios_p) * h_tilde))
    return ThresholdReport(
        h=int(h), h0=h0, bound=bound,
        sample_check={
            "samples": samples,
            "seed": seed,
            "constant_b": const_b,
            "constant_P": const_p,
            "finite": bool(np.isfinite(const_b) and np.isfinite(const_p)),
        })
