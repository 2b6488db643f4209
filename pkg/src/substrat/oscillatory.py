"""Oscillatory kernel integrals of the modulated multiplier and their
stationary-phase asymptotics.

The kernel value on the dilation curve has the double-integral form

    Omega_t(2ty, t^2 v) = t^(-Q/2) e^{i pi d1/4} / ((4 pi)^{d1/2} (2 pi)^{d2})
        * int chi(s) int exp(i t Phi - i s Sigma - i R/t) B(s/t, mu) theta(mu)
          dmu ds,

and at a certified critical point the leading term is
e^{i pi d/4} e^{i t Psi} A with the amplitude A assembled from the same
ingredients at the critical dual vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    BranchRegionViolated,
    DegenerateHessian,
    GridTooCoarse,
    NearPole,
    NewtonDiverged,
    NonpositiveValue,
)
from .groups import StratifiedGroup, j_matrix, j_matrix_batch
from .phase import phi, phi_mu_derivatives
from .quadrature import gauss_legendre, tensor_grid
from .spectral import decompose, hs, ht, srdet_hS

R0_SWITCH = 0.05
R0_DEGREE = 10
_R0_CIRCLE_N = 64
_R0_CIRCLE_RADIUS = 0.3
_FOURIER_NODES = 256


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth compactly supported bump.

    Scalar centers give the standard 1-d bump exp(-1/(1 - ((s-c)/rho)^2));
    vector centers give the radial version in the norm, so the support is
    exactly the closed ball of the stated radius.  scaled_bump rescales the
    argument by 1/scale (effective radius = radius * scale) and amplitude
    multiplies the values, so that identically-zero cutoffs are expressible.
    """

    center: object
    radius: float
    shape: str = "std_bump"
    scale: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.shape not in ("std_bump", "scaled_bump"):
            raise ValueError("shape must be 'std_bump' or 'scaled_bump'")
        if self.shape == "scaled_bump" and self.scale <= 0.0:
            raise ValueError("scale must be positive")
        if isinstance(self.center, (list, np.ndarray)):
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        elif isinstance(self.center, tuple):
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        else:
            object.__setattr__(self, "center", float(self.center))

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.center, float)

    @property
    def effective_radius(self) -> float:
        return self.radius * (self.scale if self.shape == "scaled_bump" else 1.0)

    def __call__(self, s):
        rho = self.effective_radius
        if self.is_scalar:
            arg = (np.asarray(s, dtype=float) - self.center) / rho
            r2 = arg * arg
        else:
            c = np.asarray(self.center)
            diff = np.asarray(s, dtype=float) - c
            r2 = np.sum(diff * diff, axis=-1) / rho ** 2
        out = np.zeros_like(np.asarray(r2, dtype=float))
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        out = self.amplitude * out
        return out if out.shape else float(out)

    def fourier(self, lam):
        """Fourier transform int chi(s) e^{-i s lam} ds (scalar cutoffs)."""
        if not self.is_scalar:
            raise ValueError("fourier is defined for scalar cutoffs only")
        nodes, weighted_vals = _bump_quadrature(self)
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.exp(-1j * np.outer(lam_arr, nodes)) @ weighted_vals
        return out if np.ndim(lam) else complex(out[0])


@lru_cache(maxsize=64)
def _bump_quadrature(spec: CutoffSpec):
    rho = spec.effective_radius
    nodes, weights = gauss_legendre(_FOURIER_NODES, spec.center - rho,
                                    spec.center + rho)
    return nodes, weights * spec(nodes)


def multiplier_m(chi: CutoffSpec, t: float, lam: float) -> complex:
    """Modulated multiplier e^{i t lam} * chi_hat(lam)."""
    return np.exp(1j * t * np.asarray(lam)) * chi.fourier(lam)


def amplitude_B(g: StratifiedGroup, sigma: float, mu) -> complex:
    """(1 - sigma)^(-d1/2) sqrt det hs((1 - sigma) i J_mu).

    Real positive in the admissible region sigma != 1, (1 - sigma) b_j < pi.
    """
    if sigma == 1.0:
        raise ValueError("sigma = 1 is outside the domain")
    z = (1.0 - sigma) * 1j
    det_part = srdet_hS(z, g, mu)
    return complex((1.0 - sigma) ** (-g.d1 / 2.0) * det_part)


# ---------------------------------------------------------------------------
# Taylor remainder R0
# ---------------------------------------------------------------------------

def _f_sigma(sigma, z):
    return ht((1.0 - sigma) * z) / (1.0 - sigma)


def _check_r0_poles(sigma, z):
    w = (1.0 - sigma) * complex(z)
    k = round(w.real / np.pi)
    if k != 0 and abs(w - k * np.pi) < 1e-6:
        raise NearPole(f"(1 - sigma) z = {w} within 1e-6 of {k} pi")


_r0_cache: dict = {}


def _r0_taylor_coeffs(z: complex) -> np.ndarray:
    """Maclaurin coefficients c_2..c_{2+R0_DEGREE} of sigma ->
    (1-sigma)^{-1} ht((1-sigma) z), by circle-sampled differentiation."""
    key = complex(z)
    cached = _r0_cache.get(key)
    if cached is not None:
        return cached
    coeffs = _r0_taylor_coeffs_vec(np.array([key]))[:, 0]
    if len(_r0_cache) > 4096:
        _r0_cache.clear()
    _r0_cache[key] = coeffs
    return coeffs


def _r0_taylor_coeffs_vec(z_arr: np.ndarray) -> np.ndarray:
    """Vectorized coefficient table, shape (R0_DEGREE + 1, len(z))."""
    z_arr = np.asarray(z_arr, dtype=complex).reshape(-1)
    k = np.arange(_R0_CIRCLE_N)
    sig = _R0_CIRCLE_RADIUS * np.exp(2j * np.pi * k / _R0_CIRCLE_N)
    w = (1.0 - sig[:, None]) * z_arr[None, :]
    k_near = np.round(w.real / np.pi)
    bad = (k_near != 0) & (np.abs(w - k_near * np.pi) < 1e-6)
    if np.any(bad):
        raise NearPole("(1 - sigma) z hits a pole on the sampling circle")
    f = ht(w) / (1.0 - sig[:, None])
    hat = np.fft.fft(f, axis=0) / _R0_CIRCLE_N
    orders = np.arange(2, 2 + R0_DEGREE + 1)
    return hat[orders] / _R0_CIRCLE_RADIUS ** orders[:, None]


def remainder_R0(sigma: complex, z: complex) -> complex:
    """R0 in the expansion
    (1-sigma)^{-1} ht((1-sigma) z) = ht(z) + hs(z)^2 sigma + R0(sigma, z) sigma^2.

    Direct formula for |sigma| > 0.05; degree-10 Maclaurin polynomial in
    sigma (coefficients cached per z) below the switchover.
    """
    sigma = complex(sigma)
    z = complex(z)
    if sigma == 1.0:
        raise ValueError("sigma = 1 is outside the domain")
    _check_r0_poles(sigma, z)
    _check_r0_poles(0.0, z)
    if abs(sigma) > R0_SWITCH:
        value = (_f_sigma(sigma, z) - ht(z) - hs(z) ** 2 * sigma) / sigma ** 2
        return complex(value)
    coeffs = _r0_taylor_coeffs(z)
    acc = complex(0.0)
    for c in coeffs[::-1]:
        acc = acc * sigma + c
    return complex(acc)


def sigma_form(g: StratifiedGroup, y, mu) -> float:
    """Sigma(y, mu) = |hs(i J_mu) y|^2; at least |y|^2 for b_j < pi."""
    y = np.asarray(y, dtype=float).reshape(g.d1)
    dec = decompose(g, mu)
    for b in dec.eigenvalues:
        k = round(float(b) / np.pi)
        if k >= 1 and abs(float(b) - k * np.pi) < 1e-8:
            raise NearPole(f"eigenvalue {b} within 1e-8 of {k} pi")
    total = float((dec.kernel_projection @ y) @ (dec.kernel_projection @ y))
    for b, proj in zip(dec.eigenvalues, dec.projections):
        total += float(hs(float(b))) ** 2 * float(y @ proj @ y)
    return total


# ---------------------------------------------------------------------------
# The oscillatory integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscGrid:
    """Quadrature parameters for omega.

    mu_nodes_per_axis defaults to 32 * ceil(sqrt(t)); when tolerance is set
    the integral is recomputed with doubled mu nodes and GridTooCoarse is
    raised if the relative discrepancy exceeds it.
    """

    mu_nodes_per_axis: int | None = None
    s_nodes: int = 64
    tolerance: float | None = None


@dataclass(frozen=True)
class OmegaQuery:
    t: float
    y: np.ndarray
    v: np.ndarray
    chi: CutoffSpec
    theta: CutoffSpec
    quadrature: OscGrid = field(default_factory=OscGrid)

    def __post_init__(self):
        if self.t < 1.0:
            raise ValueError("t must be >= 1")


def _theta_center(g: StratifiedGroup, theta: CutoffSpec) -> np.ndarray:
    if theta.is_scalar:
        if g.d2 != 1:
            raise ValueError("theta must have a d2-dimensional center")
        return np.array([theta.center])
    center = np.asarray(theta.center, dtype=float)
    if center.shape != (g.d2,):
        raise ValueError("theta center has wrong dimension")
    return center


def _validate_omega_cutoffs(g: StratifiedGroup, t: float, chi: CutoffSpec,
                            theta: CutoffSpec) -> np.ndarray:
    if not chi.is_scalar or chi.center != 0.0:
        raise ValueError("chi must be a scalar cutoff centered at 0")
    if chi.effective_radius > 0.5 + 1e-12:
        raise ValueError("chi must be supported in [-1/2, 1/2]")
    center = _theta_center(g, theta)
    if np.linalg.norm(center) + theta.effective_radius > 1.0 + 1e-12:
        raise ValueError("theta must be supported in the unit ball")
    bound = np.linalg.norm(j_matrix(g, center), 2) \
        + g.j_opnorm_bound() * theta.effective_radius
    if (1.0 + 0.5 / t) * bound >= np.pi:
        raise BranchRegionViolated(
            "theta support reaches the pole region of the amplitude")
    return center


def omega(g: StratifiedGroup, q: OmegaQuery) -> complex:
    """Omega_t^{chi,theta}(2ty, t^2 v) by tensor Gauss-Legendre quadrature.

    The mu integrand is evaluated from one batched eigendecomposition of
    -J_mu^2 per node (no clustering; every ingredient is an even analytic
    function of J_mu), with nodes summed in numpy's pairwise order.
    """
    t = float(q.t)
    y = np.asarray(q.y, dtype=float).reshape(g.d1)
    v = np.asarray(q.v, dtype=float).reshape(g.d2)
    center = _validate_omega_cutoffs(g, t, q.chi, q.theta)
    n_mu = q.quadrature.mu_nodes_per_axis or 32 * int(np.ceil(np.sqrt(t)))

    def _eval(n_axis: int) -> complex:
        rho = q.theta.effective_radius
        bounds = [(c - rho, c + rho) for c in center]
        pts, wts = tensor_grid(bounds, n_axis)
        theta_vals = q.theta(pts) if g.d2 > 1 else q.theta(pts[:, 0])
        jm = j_matrix_batch(g, pts)
        a = jm @ np.swapaxes(jm, -1, -2)
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        w, vv = np.linalg.eigh(a)
        b = np.sqrt(np.clip(w, 0.0, None))
        coeff = np.einsum("k,nki->ni", y, vv) ** 2
        ht_b = ht(b)
        hs_b = hs(b)
        phi_vals = -np.sum(ht_b * coeff, axis=1) + pts @ v
        sigma_vals = np.sum(hs_b ** 2 * coeff, axis=1)
        b_pairs = b[:, ::-1][:, ::2]
        r0_coeffs = _r0_taylor_coeffs_vec(b.ravel()).reshape(
            R0_DEGREE + 1, *b.shape)

        s_nodes, s_wts = gauss_legendre(
            q.quadrature.s_nodes, -q.chi.effective_radius, q.chi.effective_radius)
        chi_vals = q.chi(s_nodes)
        acc = 0.0 + 0.0j
        r = 1.0 / t
        for s, sw, cv in zip(s_nodes, s_wts, chi_vals):
            sigma = s * r
            r0_vals = np.zeros_like(b, dtype=complex)
            for c in r0_coeffs[::-1]:
                r0_vals = r0_vals * sigma + c
            r_vals = s * s * np.sum(r0_vals.real * coeff, axis=1)
            b_amp = (1.0 - sigma) ** (-g.d1 / 2.0) \
                * np.prod(hs((1.0 - sigma) * b_pairs), axis=1)
            integrand = np.exp(1j * (t * phi_vals - s * sigma_vals - r * r_vals)) \
                * b_amp * theta_vals
            acc += sw * cv * np.sum(wts * integrand)
        prefactor = t ** (-g.Q / 2.0) * np.exp(1j * np.pi * g.d1 / 4.0) \
            / ((4.0 * np.pi) ** (g.d1 / 2.0) * (2.0 * np.pi) ** g.d2)
        return complex(prefactor * acc)

    value = _eval(n_mu)
    if q.quadrature.tolerance is not None:
        refined = _eval(2 * n_mu)
        err = abs(refined - value) / max(abs(refined), 1e-300)
        if err > q.quadrature.tolerance:
            raise GridTooCoarse(
                f"self-convergence estimate {err:.3e} exceeds tolerance "
                f"{q.quadrature.tolerance:.3e}")
        return refined
    return value


# ---------------------------------------------------------------------------
# Stationary-phase prediction
# ---------------------------------------------------------------------------

def _newton_critical(g: StratifiedGroup, y, v, mu0, tol: float = 1e-12,
                     max_iter: int = 50) -> np.ndarray:
    mu = np.asarray(mu0, dtype=float).copy()
    scale = 1.0 + float(np.asarray(y) @ np.asarray(y))
    grad = phi_mu_derivatives(g, y, v, mu, order=1)
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol * scale:
            return mu
        hess = phi_mu_derivatives(g, y, v, mu, order=2)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular Hessian during Newton") from exc
        alpha = 1.0
        while alpha >= 1e-6:
            cand = mu - alpha * step
            cand_grad = phi_mu_derivatives(g, y, v, cand, order=1)
            if float(np.linalg.norm(cand_grad)) < gnorm:
                mu, grad = cand, cand_grad
                break
            alpha *= 0.5
        else:
            raise NewtonDiverged("damped Newton failed to decrease gradient")
    if float(np.linalg.norm(grad)) <= tol * scale:
        return mu
    raise NewtonDiverged(f"no convergence in {max_iter} iterations")


def stationary_prediction(g: StratifiedGroup, t: float, y, v, chi: CutoffSpec,
                          theta: CutoffSpec, cert) -> complex:
    """Leading stationary-phase term e^{i pi d/4} e^{i t Psi(y,v)} A(y, v).

    The critical dual vector is found by damped Newton from the certificate;
    the inverse-square-root determinant uses the positive-definite branch
    (any non-positive-definite Hessian is reported as degenerate).
    """
    y = np.asarray(y, dtype=float).reshape(g.d1)
    v = np.asarray(v, dtype=float).reshape(g.d2)
    mu_c = _newton_critical(g, y, v, cert.mu0)

    hess = phi_mu_derivatives(g, y, v, mu_c, order=2)
    eigs = np.linalg.eigvalsh(hess)
    det = float(np.prod(eigs))
    det_scale = max(1.0, float(np.linalg.norm(hess))) ** g.d2
    if abs(det) < 1e-12 * det_scale:
        raise DegenerateHessian(f"|det Hessian| = {abs(det):.3e} below tolerance")
    if eigs[0] <= 0.0:
        raise DegenerateHessian(
            "Hessian not positive definite; the folded branch convention "
            "does not apply")

    srdet_iJ = complex(srdet_hS(1j, g, mu_c)).real
    theta_val = float(theta(mu_c if g.d2 > 1 else float(mu_c[0])))
    sigma_c = sigma_form(g, y, mu_c)
    chi_hat = chi.fourier(sigma_c)
    psi = phi(g, y, v, mu_c)
    amp = ((4.0 * np.pi) ** (-g.d1 / 2.0) * (2.0 * np.pi) ** (-g.d2 / 2.0)
           * srdet_iJ * theta_val * det ** (-0.5) * chi_hat)
    return complex(np.exp(1j * np.pi * g.d / 4.0) * np.exp(1j * t * psi) * amp)


def chi_for_certificate(g: StratifiedGroup, cert) -> CutoffSpec:
    """Even bump with |chi_hat(Sigma(y0, mu0))| >= chi_hat(0)/2, by halving."""
    sigma0 = sigma_form(g, cert.y0, cert.mu0)
    lam = 1.0
    for _ in range(48):
        chi = CutoffSpec(center=0.0, radius=0.5 * lam)
        if abs(chi.fourier(sigma0)) >= 0.5 * abs(chi.fourier(0.0)):
            return chi
        lam *= 0.5
    raise NewtonDiverged("chi halving did not terminate")


def theta_for_certificate(g: StratifiedGroup, cert) -> CutoffSpec:
    """Bump at mu0 with support in the unit ball and the pole-free region."""
    mu0 = np.asarray(cert.mu0, dtype=float)
    b0 = np.linalg.norm(j_matrix(g, mu0), 2)
    pole_gap = 0.5 * (np.pi - b0) / g.j_opnorm_bound()
    radius = min(1.0 - float(np.linalg.norm(mu0)), pole_gap)
    if radius <= 0.0:
        raise ValueError("certificate leaves no room for theta support")
    center = tuple(mu0) if g.d2 > 1 else float(mu0[0])
    return CutoffSpec(center=center, radius=radius)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    max_residual: float


def fit_power_law(samples) -> PowerLawFit:
    """Least-squares line through (log t, log value)."""
    samples = list(samples)
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    ts = np.array([float(t) for t, _ in samples])
    vals = np.array([float(v) for _, v in samples])
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("t values must be strictly increasing")
    if np.any(vals <= 0.0):
        raise NonpositiveValue("power-law fit requires positive values")
    logt, logv = np.log(ts), np.log(vals)
    slope, intercept = np.polyfit(logt, logv, 1)
    resid = float(np.max(np.abs(logv - (slope * logt + intercept))))
    return PowerLawFit(exponent=float(slope), intercept=float(intercept),
                       max_residual=resid)
