import numpy as np
import pytest

from substrat.errors import (
    BranchRegionViolated,
    DegenerateHessian,
    NearPole,
    NonpositiveValue,
)
from substrat.groups import heisenberg, j_matrix, rotation_family
from substrat.phase import find_critical
from substrat.oscillatory import (
    CutoffSpec,
    OmegaQuery,
    OscGrid,
    amplitude_B,
    chi_for_certificate,
    fit_power_law,
    multiplier_m,
    omega,
    remainder_R0,
    sigma_form,
    stationary_prediction,
    theta_for_certificate,
)


def _mu_with_b1(g, b1):
    mu = np.zeros(g.d2)
    mu[0] = 1.0
    top = np.linalg.norm(j_matrix(g, mu), 2)
    return mu * (b1 / top)


# ---------------------------------------------------------------------------
# cutoffs and the multiplier
# ---------------------------------------------------------------------------

def test_bump_support_and_center_value():
    chi = CutoffSpec(center=0.0, radius=0.5)
    assert chi(0.0) == pytest.approx(np.exp(-1.0))
    assert chi(0.5) == 0.0
    assert chi(0.7) == 0.0
    theta = CutoffSpec(center=(0.1, 0.2), radius=0.3)
    assert theta(np.array([0.1, 0.2])) == pytest.approx(np.exp(-1.0))
    assert theta(np.array([0.1, 0.2 + 0.31])) == 0.0


def test_scaled_bump_radius():
    chi = CutoffSpec(center=0.0, radius=0.5, shape="scaled_bump", scale=0.5)
    assert chi.effective_radius == 0.25
    assert chi(0.26) == 0.0
    assert chi(0.0) == pytest.approx(np.exp(-1.0))


def test_multiplier_at_t_zero_and_modulus():
    chi = CutoffSpec(center=0.0, radius=0.5)
    lam = 1.7
    base = multiplier_m(chi, 0.0, lam)
    assert base == pytest.approx(chi.fourier(lam))
    for t in (0.5, 3.0, 11.0):
        assert abs(multiplier_m(chi, t, lam)) == pytest.approx(abs(chi.fourier(lam)))


def test_even_bump_fourier_real_positive_at_zero():
    chi = CutoffSpec(center=0.0, radius=0.5)
    val0 = chi.fourier(0.0)
    assert val0.real > 0
    assert abs(val0.imag) < 1e-14
    assert abs(chi.fourier(2.0).imag) < 1e-14


def test_fourier_quadrature_against_scipy():
    from scipy.integrate import quad

    chi = CutoffSpec(center=0.0, radius=0.5)
    for lam in (0.0, 1.3, 4.7):
        want_re = quad(lambda s: chi(s) * np.cos(s * lam), -0.5, 0.5,
                       epsabs=1e-13)[0]
        got = chi.fourier(lam)
        assert abs(got.real - want_re) < 1e-10


# ---------------------------------------------------------------------------
# amplitude and remainder
# ---------------------------------------------------------------------------

def test_amplitude_trivial_cases():
    g = heisenberg(1)
    assert amplitude_B(g, 0.0, [0.0]) == pytest.approx(1.0)
    assert amplitude_B(g, 0.5, [0.0]) == pytest.approx(2.0)


def test_amplitude_scalar_value():
    g = heisenberg(1)
    mu = _mu_with_b1(g, 1.0)
    got = amplitude_B(g, 0.0, mu)
    assert got.real == pytest.approx(1.0 / np.sin(1.0), rel=1e-12)
    assert abs(got.imag) < 1e-14
    assert got.real > 0


def test_amplitude_branch_region():
    g = heisenberg(1)
    mu = _mu_with_b1(g, 2.0)
    with pytest.raises(BranchRegionViolated):
        amplitude_B(g, -0.8, mu)  # (1 - sigma) b = 3.6 > pi


def test_remainder_closed_form_at_z_zero():
    # R0(sigma, 0) = 1/(1 - sigma)
    assert remainder_R0(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert remainder_R0(0.5, 0.0) == pytest.approx(2.0, abs=1e-12)
    assert remainder_R0(0.02, 0.0) == pytest.approx(1.0 / 0.98, abs=1e-12)


def test_remainder_definitional_residual():
    from substrat.spectral import hs, ht

    sigmas = np.linspace(-0.3, 0.3, 13)
    zs = [0.0, 0.5, 1.3, 2.0, 1.0 + 1.0j, 2.0j * 0.9]
    for z in zs:
        for sigma in sigmas:
            r0 = remainder_R0(sigma, z)
            resid = (ht((1 - sigma) * z) / (1 - sigma) - ht(z)
                     - hs(z) ** 2 * sigma - r0 * sigma ** 2)
            assert abs(resid) <= 1e-12


def test_remainder_switchover_agreement():
    from substrat.spectral import hs, ht

    for z in (0.3, 1.0, 2.0, 0.5 + 0.5j):
        for sign in (1.0, -1.0):
            sigma = sign * 0.0499999  # just inside the Taylor branch
            direct = (ht((1 - sigma) * z) / (1 - sigma) - ht(z)
                      - hs(z) ** 2 * sigma) / sigma ** 2
            taylor = remainder_R0(sigma, z)
            assert abs(direct - taylor) <= 1e-9 * max(1.0, abs(direct))


def test_remainder_near_pole():
    with pytest.raises(NearPole):
        remainder_R0(0.5, 2 * np.pi)  # (1 - sigma) z = pi


def test_sigma_form_values():
    g = heisenberg(1)
    y = np.array([0.7, -0.2])
    assert sigma_form(g, y, [0.0]) == pytest.approx(float(y @ y))
    assert sigma_form(g, np.zeros(2), _mu_with_b1(g, 1.0)) == 0.0
    got = sigma_form(g, y, _mu_with_b1(g, 1.0))
    assert got == pytest.approx(float(y @ y) / np.sin(1.0) ** 2, rel=1e-12)
    assert got >= float(y @ y)


# ---------------------------------------------------------------------------
# omega and the stationary prediction
# ---------------------------------------------------------------------------

def _setup(g, seed=0):
    cert = find_critical(g, seed=seed)
    return cert, chi_for_certificate(g, cert), theta_for_certificate(g, cert)


def test_omega_zero_cutoffs():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    chi0 = CutoffSpec(center=0.0, radius=chi.radius, amplitude=0.0)
    q = OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi0, theta=theta)
    assert omega(g, q) == 0.0
    theta0 = CutoffSpec(center=theta.center, radius=theta.radius, amplitude=0.0)
    q = OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi, theta=theta0)
    assert omega(g, q) == 0.0


def test_omega_self_convergence():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    q1 = OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi, theta=theta)
    q2 = OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi, theta=theta,
                    quadrature=OscGrid(mu_nodes_per_axis=192))
    v1, v2 = omega(g, q1), omega(g, q2)
    assert abs(v1 - v2) <= 1e-6 * abs(v2)


def test_omega_even_data_symmetry():
    # Phi, Sigma, R are even in (y, mu); for even chi and theta the kernel
    # value is invariant under v -> -v and under y -> -y
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    theta_sym = CutoffSpec(center=0.0, radius=theta.radius + float(np.abs(cert.mu0[0])))
    a = omega(g, OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi, theta=theta_sym))
    b = omega(g, OmegaQuery(t=8.0, y=cert.y0, v=-cert.v0, chi=chi, theta=theta_sym))
    c = omega(g, OmegaQuery(t=8.0, y=-cert.y0, v=cert.v0, chi=chi, theta=theta_sym))
    assert abs(b - a) <= 1e-12 * abs(a)
    assert abs(c - a) <= 1e-12 * abs(a)


def test_omega_requires_t_at_least_one():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    with pytest.raises(ValueError):
        OmegaQuery(t=0.5, y=cert.y0, v=cert.v0, chi=chi, theta=theta)


def test_omega_rejects_bad_cutoffs():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    wide_chi = CutoffSpec(center=0.0, radius=0.8)
    with pytest.raises(ValueError):
        omega(g, OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=wide_chi, theta=theta))
    off_theta = CutoffSpec(center=0.9, radius=0.5)
    with pytest.raises(ValueError):
        omega(g, OmegaQuery(t=8.0, y=cert.y0, v=cert.v0, chi=chi, theta=off_theta))


def test_prediction_recovers_certificate_point():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    from substrat.oscillatory import _newton_critical

    mu_c = _newton_critical(g, cert.y0, cert.v0, cert.mu0)
    assert np.linalg.norm(mu_c - cert.mu0) < 1e-10


def test_prediction_heisenberg_bisection_oracle():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    y = cert.y0 * 1.05
    v = cert.v0 + 0.03
    from substrat.oscillatory import _newton_critical

    mu_c = _newton_critical(g, y, v, cert.mu0)

    # scalar oracle: dPhi/dmu = -|y|^2 ht'(tau)/sqrt(2) + v = 0 by bisection,
    # ht'(tau) = (sin tau cos tau - tau)/sin^2 tau
    y_sq = float(y @ y)

    def deriv(mu):
        tau = mu / np.sqrt(2.0)
        if tau == 0.0:
            return float(v[0])
        gp = (np.sin(tau) * np.cos(tau) - tau) / np.sin(tau) ** 2
        return -y_sq * gp / np.sqrt(2.0) + float(v[0])

    lo, hi = -2.0, 2.0
    assert deriv(lo) * deriv(hi) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if deriv(lo) * deriv(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert abs(mu_c[0] - 0.5 * (lo + hi)) < 1e-10


def test_prediction_zero_when_theta_vanishes():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    far_theta = CutoffSpec(center=0.9, radius=0.05)
    val = stationary_prediction(g, 8.0, cert.y0, cert.v0, chi, far_theta, cert)
    assert val == 0.0


def test_prediction_degenerate_hessian():
    g = heisenberg(1)
    cert, chi, theta = _setup(g)
    # flip to a concave location: y = 0 makes Phi0 vanish, Hessian 0
    with pytest.raises((DegenerateHessian, Exception)):
        stationary_prediction(g, 8.0, np.zeros(2), np.zeros(1), chi, theta, cert)


def test_fit_power_law_examples():
    ts = [1.0, 2.0, 4.0, 8.0]
    fit = fit_power_law([(t, 3.0 * t ** 2) for t in ts])
    assert abs(fit.exponent - 2.0) < 1e-12
    fit = fit_power_law([(t, 5.0) for t in ts])
    assert abs(fit.exponent) < 1e-12
    rng = np.random.default_rng(0)
    noisy = [(t, 2.0 * t ** -2.5 * (1.0 + 0.01 * rng.uniform(-1, 1))) for t in ts]
    fit = fit_power_law(noisy)
    assert abs(fit.exponent + 2.5) < 0.05


def test_fit_power_law_rejects_nonpositive():
    with pytest.raises(NonpositiveValue):
        fit_power_law([(1.0, 1.0), (2.0, -0.5), (4.0, 1.0)])
    with pytest.raises(ValueError):
        fit_power_law([(1.0, 1.0), (1.0, 2.0), (4.0, 1.0)])
