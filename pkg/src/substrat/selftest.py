"""Acceptance criteria as callable checks, shared by the CLI selftest and
the pytest acceptance suite.

Each criterion returns a CriterionResult with the measured values and its
pass/fail verdict at the pinned tolerance; the quick level runs the fast
criteria (with reduced group lists where noted), the full level runs all
nine computational criteria.  Byte-determinism of the selftest report
(criterion 10) is checked externally by invoking the CLI twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bernoulli import hankel_det, zeta_series_det
from .groups import free2step, heisenberg, htype, j_matrix, rotation_family
from .heat import HeatQuery, heat_partial_ft
from .kernel import heatcap_multiplier, kernel_ft, threshold_report
from .oscillatory import (
    OmegaQuery,
    chi_for_certificate,
    fit_power_law,
    omega,
    remainder_R0,
    stationary_prediction,
    theta_for_certificate,
)
from .phase import filtration_blocks, find_critical, phi0, phi_mu_derivatives
from .quadrature import tensor_grid
from .spectral import hs, ht


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    tolerance: str
    measured: dict = field(default_factory=dict)


def _builtin_set():
    return [("heisenberg:1", heisenberg(1)), ("htype:4,3", htype(4, 3)),
            ("free2step:3", free2step(3)), ("rotfam:1,2", rotation_family(1, 2))]


def criterion_1(full: bool = True) -> CriterionResult:
    """Hankel positivity, the exact spot value, and the zeta-series oracle."""
    all_positive = True
    for m in range(0, 9):
        for s in range(1, 9):
            if not hankel_det(m, s) > 0:
                all_positive = False
    spot_ok = hankel_det(1, 2) == Fraction(1, 4465125)
    worst = 0.0
    for m in range(0, 3):
        for s in range(1, 4):
            kmax = 5_000_000 if m == 0 else 10_000
            val = zeta_series_det(m, s, kmax)
            exact = float(hankel_det(m, s))
            worst = max(worst, abs(val - exact) / exact)
    passed = all_positive and spot_ok and worst < 1e-6
    return CriterionResult(
        cid=1, name="hankel-positivity",
        passed=passed,
        tolerance="det > 0 exact; Z_{1,2} = 1/4465125; series within 1e-6",
        measured={"all_positive": all_positive, "spot_exact": spot_ok,
                  "worst_series_rel_err": worst})


def criterion_2(full: bool = True) -> CriterionResult:
    """Mehler reduction to the Euclidean Gaussian at mu = 0."""
    g = heisenberg(1)
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(100):
        z = complex(rng.uniform(0.1, 5.0), rng.uniform(-1.0, 1.0))
        x = rng.standard_normal(2)
        got = heat_partial_ft(g, HeatQuery(z=z, mu=np.zeros(1), x=x))
        want = (4.0 * np.pi * z) ** (-1.0) * np.exp(-(x @ x) / (4.0 * z))
        worst = max(worst, abs(got - want) / abs(want))
    return CriterionResult(
        cid=2, name="mehler-euclidean-reduction", passed=worst <= 1e-12,
        tolerance="rel err <= 1e-12 over 100 random (z, x)",
        measured={"worst_rel_err": worst})


def criterion_3(full: bool = True) -> CriterionResult:
    """Mehler vs Laguerre cross-oracle on heisenberg(1)."""
    g = heisenberg(1)
    F = heatcap_multiplier(z=1.0, kmax=40.0)
    rng = np.random.default_rng(21)
    pts, wts = tensor_grid([(-12.0, 12.0)] * 2, 80)
    worst = 0.0
    for _ in range(20):
        b1 = rng.uniform(0.2, 2.0)
        mu = np.array([np.sqrt(2.0) * b1])
        xi = rng.standard_normal(2)
        pvals = np.array([heat_partial_ft(g, HeatQuery(z=1.0, mu=mu, x=p))
                          for p in pts])
        want = np.sum(wts * pvals * np.exp(-1j * pts @ xi))
        got = kernel_ft(g, F, xi, mu)
        worst = max(worst, abs(got - want) / abs(want))
    return CriterionResult(
        cid=3, name="mehler-laguerre-cross-oracle", passed=worst < 1e-6,
        tolerance="rel err < 1e-6 at 20 random (xi, mu), b1 in [0.2, 2]",
        measured={"worst_rel_err": worst})


def criterion_4(full: bool = True) -> CriterionResult:
    """Phase series vs spectral evaluation of Phi0."""
    rng = np.random.default_rng(22)
    worst = 0.0
    for g in (heisenberg(1), htype(4, 3), free2step(3)):
        for _ in range(100):
            mu = rng.standard_normal(g.d2)
            nrm = np.linalg.norm(j_matrix(g, mu), 2)
            mu *= rng.uniform(0.05, 2.0) / nrm
            y = rng.standard_normal(g.d1)
            a = phi0(g, y, mu, method="spectral")
            b = phi0(g, y, mu, method="series", kmax=60)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return CriterionResult(
        cid=4, name="phase-series-vs-spectral", passed=worst <= 1e-10,
        tolerance="rel err <= 1e-10, 100 random (y, mu) per group, ||J|| <= 2",
        measured={"worst_rel_err": worst})


def criterion_5(full: bool = True) -> CriterionResult:
    """Critical-point certification on the builtin corpus (seed 0)."""
    groups = _builtin_set() if full else [
        ("heisenberg:1", heisenberg(1)), ("rotfam:1,2", rotation_family(1, 2))]
    measured = {}
    passed = True
    for name, g in groups:
        cert = find_critical(g, seed=0)
        grad = phi_mu_derivatives(g, cert.y0, cert.v0, cert.mu0, order=1)
        y_sq = float(cert.y0 @ cert.y0)
        ok = (float(np.linalg.norm(cert.mu0)) < 1.0
              and float(np.linalg.norm(grad)) <= 1e-8 * (1.0 + y_sq)
              and cert.min_abs_eigenvalue > 0.0)
        measured[name] = {"mu0_norm": float(np.linalg.norm(cert.mu0)),
                          "grad_norm": float(np.linalg.norm(grad)),
                          "min_eig": cert.min_abs_eigenvalue}
        passed = passed and ok
        if name == "heisenberg:1":
            t = g.dual_basis_transform[0, 0]
            hess_raw = float(t * cert.hessian[0, 0] * t)
            closed = (2.0 / 3.0) * y_sq
            dev = abs(hess_raw - closed)
            measured[name]["hessian_raw_deviation"] = dev
            passed = passed and dev < 1e-6
    return CriterionResult(
        cid=5, name="critical-point-certification", passed=passed,
        tolerance="|mu0| < 1, grad <= 1e-8 scale, Hessian PD; heisenberg "
                  "closed form within 1e-6",
        measured=measured)


def criterion_6(full: bool = True) -> CriterionResult:
    """Filtration block asymptotics on free2step(3)."""
    g = free2step(3)
    rng = np.random.default_rng(7)
    s_dir = rng.standard_normal(3)
    s_dir /= np.linalg.norm(s_dir)
    anchor = rng.standard_normal(3)
    eps_list = [2.0 ** -k for k in range(3, 9)]
    filts = [filtration_blocks(g, s_dir, anchor, eps) for eps in eps_list]
    f0 = filts[0]
    from .bernoulli import bernoulli_b

    norms = [float(np.linalg.norm(f.block(0, 1))) for f in filts]
    fit = fit_power_law(list(zip(eps_list[::-1], norms[::-1])))
    slope_dev = abs(fit.exponent - 2.0)

    worst_even = 0.0
    for (i, j) in ((0, 0), (1, 1)):
        scaled = [f.block(i, j) / f.eps ** (i + j) for f in filts[:3]]
        rich1 = [(4.0 * scaled[k + 1] - scaled[k]) / 3.0 for k in range(2)]
        limit = (16.0 * rich1[1] - rich1[0]) / 15.0
        wa, wb = f0.w_bases[i], f0.w_bases[j]
        lead = np.zeros_like(limit)
        for a in range(wa.shape[1]):
            for b in range(wb.shape[1]):
                amat = j_matrix(g, wa[:, a])
                bmat = j_matrix(g, wb[:, b])
                va = np.linalg.matrix_power(f0.s_matrix, i) @ anchor
                vb = np.linalg.matrix_power(f0.s_matrix, j) @ anchor
                lead[a, b] = ((-1.0) ** ((i - j) // 2)
                              * bernoulli_b(1 + (i + j) // 2).float
                              * float((amat @ va) @ (bmat @ vb)))
        worst_even = max(worst_even, float(
            np.linalg.norm(limit - lead) / np.linalg.norm(lead)))
    passed = slope_dev < 0.2 and worst_even < 1e-4
    return CriterionResult(
        cid=6, name="filtration-block-asymptotics", passed=passed,
        tolerance="odd slope within 0.2 of i+j+1; even leading coeff 1e-4",
        measured={"odd_slope": fit.exponent, "even_worst_rel": worst_even})


def criterion_7(full: bool = True) -> CriterionResult:
    """Stationary-phase decay and amplitude on the dilation curve."""
    cases = [("heisenberg:1", heisenberg(1), 0.10)]
    if full:
        cases.append(("rotfam:1,2", rotation_family(1, 2), 0.20))
    measured = {}
    passed = True
    for name, g, amp_tol in cases:
        cert = find_critical(g, seed=0)
        chi = chi_for_certificate(g, cert)
        theta = theta_for_certificate(g, cert)
        expo = g.Q - g.d / 2.0
        samples = []
        last_omega = None
        pred_abs = None
        for t in (8.0, 16.0, 32.0, 64.0):
            om = omega(g, OmegaQuery(t=t, y=cert.y0, v=cert.v0,
                                     chi=chi, theta=theta))
            pred = stationary_prediction(g, t, cert.y0, cert.v0, chi, theta, cert)
            samples.append((t, abs(t ** expo * om - pred)))
            last_omega = om
            pred_abs = abs(pred)
        fit = fit_power_law(samples)
        amp_dev = abs(abs(last_omega) * 64.0 ** expo - pred_abs) / pred_abs
        ok = -1.4 <= fit.exponent <= -0.6 and amp_dev <= amp_tol
        measured[name] = {"error_slope": fit.exponent, "amplitude_rel_dev": amp_dev,
                          "amplitude": pred_abs}
        passed = passed and ok
    return CriterionResult(
        cid=7, name="stationary-phase-decay", passed=passed,
        tolerance="slope in [-1.4, -0.6] over t in {8,16,32,64}; amplitude "
                  "within 10% (20% for rotfam)",
        measured=measured)


def criterion_8(full: bool = True) -> CriterionResult:
    """Taylor-remainder identity residual on the (sigma, z) grid."""
    worst = 0.0
    sigmas = np.linspace(-0.3, 0.3, 13)
    zs = [0.0, 0.4, 0.9, 1.5, 2.0, 1.2 + 1.2j, 1.8j]
    for z in zs:
        for sigma in sigmas:
            r0 = remainder_R0(sigma, z)
            resid = (ht((1 - sigma) * z) / (1 - sigma) - ht(z)
                     - hs(z) ** 2 * sigma - r0 * sigma ** 2)
            worst = max(worst, abs(resid))
    spot1 = abs(remainder_R0(0.0, 0.0) - 1.0)
    spot2 = abs(remainder_R0(0.5, 0.0) - 2.0)
    passed = worst <= 1e-12 and spot1 <= 1e-12 and spot2 <= 1e-12
    return CriterionResult(
        cid=8, name="taylor-remainder", passed=passed,
        tolerance="residual <= 1e-12 on |sigma| <= 0.3, |z| <= 2; "
                  "R0(0,0) = 1 and R0(0.5,0) = 2 within 1e-12",
        measured={"worst_residual": worst, "spot_00": spot1, "spot_half0": spot2})


def criterion_9(full: bool = True) -> CriterionResult:
    """Threshold bound strictness and derivative-estimate sampling."""
    groups = _builtin_set() if full else [("heisenberg:1", heisenberg(1))]
    measured = {}
    passed = True
    for name, g in groups:
        r1 = threshold_report(g, samples=200, seed=0)
        r2 = threshold_report(g, samples=200, seed=1)
        entry = {"h": r1.h, "bound": r1.bound, "q_half": g.Q / 2.0,
                 "constant_b": [r1.sample_check["constant_b"],
                                r2.sample_check["constant_b"]],
                 "constant_P": [r1.sample_check["constant_P"],
                                r2.sample_check["constant_P"]]}
        ok = r1.bound < g.Q / 2.0 and r1.sample_check["finite"] \
            and r2.sample_check["finite"]
        for key in ("constant_b", "constant_P"):
            a, b = entry[key]
            scale = max(a, b, 1e-12)
            ok = ok and (min(a, b) + 1e-12) * 2.0 >= scale
        if name == "heisenberg:1":
            ok = ok and r1.bound == 1.5
        measured[name] = entry
        passed = passed and ok
    return CriterionResult(
        cid=9, name="threshold-bound", passed=passed,
        tolerance="heisenberg bound exactly 1.5; bound < Q/2 on every "
                  "builtin; fitted constants finite, stable within factor 2",
        measured=measured)


QUICK_CRITERIA = (criterion_1, criterion_2, criterion_4, criterion_5,
                  criterion_8, criterion_9)
FULL_CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4,
                 criterion_5, criterion_6, criterion_7, criterion_8,
                 criterion_9)


def run_selftest(level: str = "quick") -> dict:
    """Run the acceptance criteria at the requested level.

    quick runs the fast criteria with reduced group lists; full runs all
    nine computational criteria on the complete builtin corpus.
    """
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    full = level == "full"
    criteria = FULL_CRITERIA if full else QUICK_CRITERIA
    results = [fn(full=full) for fn in criteria]
    return {
        "level": level,
        "passed": all(r.passed for r in results),
        "criteria": [
            {"id": r.cid, "name": r.name, "passed": r.passed,
             "tolerance": r.tolerance, "measured": r.measured}
            for r in results
        ],
    }
