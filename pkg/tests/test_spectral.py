import numpy as np
import pytest
import scipy.linalg

from substrat.errors import BranchRegionViolated, NearPole
from substrat.groups import (
    build_group,
    free2step,
    heisenberg,
    htype,
    j_matrix,
    rotation_family,
)
from substrat.spectral import (
    decompose,
    generic_eigencount,
    hs,
    ht,
    spectral_apply,
    srdet_hS,
)

ALL_BUILTINS = [heisenberg(1), htype(4, 3), free2step(3), rotation_family(1, 2)]


def _mu_with_b1(g, b1):
    """Heisenberg-type helper: orthonormal mu whose top eigenvalue is b1."""
    mu = np.zeros(g.d2)
    mu[0] = 1.0
    jm = j_matrix(g, mu)
    top = np.linalg.norm(jm, 2)
    return mu * (b1 / top)


def test_decompose_single_rotation_block():
    g = build_group([[[0.0, 2.0], [-2.0, 0.0]]])
    # raw tau giving J = [[0,2],[-2,0]] has orthonormal coordinate |J|_HS
    mu = g.dual_basis_transform @ np.array([1.0])
    dec = decompose(g, mu)
    assert dec.M == 1
    assert abs(dec.eigenvalues[0] - 2.0) < 1e-12
    assert dec.ranks.tolist() == [1]
    assert np.allclose(dec.projections[0], np.eye(2))
    assert dec.kernel_rank == 0


def test_decompose_zero_mu():
    g = heisenberg(2)
    dec = decompose(g, np.zeros(1))
    assert dec.M == 0
    assert dec.kernel_rank == g.d1
    assert np.allclose(dec.kernel_projection, np.eye(g.d1))


def test_decompose_two_blocks():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    c = np.zeros((1, 4, 4))
    c[0, :2, :2] = rot
    c[0, 2:, 2:] = 3 * rot
    g = build_group(c)
    mu = g.dual_basis_transform @ np.array([1.0])
    dec = decompose(g, mu)
    assert dec.M == 2
    assert np.allclose(dec.eigenvalues, [3.0, 1.0])
    assert dec.ranks.tolist() == [1, 1]
    block_hi = np.zeros((4, 4))
    block_hi[2:, 2:] = np.eye(2)
    assert np.allclose(dec.projections[0], block_hi, atol=1e-12)


def test_decompose_partition_and_orthogonality():
    rng = np.random.default_rng(7)
    for g in ALL_BUILTINS:
        mu = rng.standard_normal(g.d2)
        dec = decompose(g, mu)
        total = dec.kernel_projection.copy()
        for p in dec.projections:
            total += p
        assert np.max(np.abs(total - np.eye(g.d1))) < 1e-12
        for i in range(dec.M):
            for j in range(i + 1, dec.M):
                assert np.max(np.abs(dec.projections[i] @ dec.projections[j])) < 1e-12


def test_decompose_reconstruction_vs_dense_sqrt():
    # dense symmetric eigensolver oracle, no clustering
    rng = np.random.default_rng(8)
    for g in ALL_BUILTINS:
        mu = rng.standard_normal(g.d2)
        dec = decompose(g, mu)
        jm = j_matrix(g, mu)
        w, v = np.linalg.eigh(-jm @ jm)
        oracle = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        b1 = dec.eigenvalues[0] if dec.M else 0.0
        assert np.max(np.abs(dec.sqrt_matrix() - oracle)) <= 1e-10 * (1.0 + b1)


def test_decompose_scaling_covariance():
    rng = np.random.default_rng(9)
    for g in ALL_BUILTINS:
        mu = rng.standard_normal(g.d2)
        dec1 = decompose(g, mu)
        dec2 = decompose(g, 2.5 * mu)
        assert np.max(np.abs(dec2.eigenvalues - 2.5 * dec1.eigenvalues)) < 1e-10
        assert np.max(np.abs(dec2.projections - dec1.projections)) < 1e-10


def test_generic_eigencount_examples():
    assert generic_eigencount(heisenberg(1)) == 1
    assert generic_eigencount(htype(4, 3)) == 1
    assert generic_eigencount(rotation_family(1, 2)) == 2


def test_spectral_apply_identity_at_zero():
    g = heisenberg(1)
    out = spectral_apply("T", 0.0, g, [0.7])
    assert np.max(np.abs(out - np.eye(2))) < 1e-14


def test_spectral_apply_ht_quarter_pi():
    g = heisenberg(1)
    mu = _mu_with_b1(g, np.pi / 4)
    out = spectral_apply("T", 1j, g, mu)
    # ht(i * i * pi/4) = ht(pi/4) = (pi/4)/tan(pi/4) = pi/4
    assert np.max(np.abs(out - (np.pi / 4) * np.eye(2))) < 1e-12
    assert np.max(np.abs(out.imag)) < 1e-12


def test_spectral_apply_hs_scalar():
    g = heisenberg(1)
    mu = _mu_with_b1(g, 1.0)
    out = spectral_apply("S", 1.0, g, mu)
    expected = 1.0 / np.sinh(1.0)
    assert np.max(np.abs(out - expected * np.eye(2))) < 1e-12


def test_spectral_apply_power_series():
    # <ht(iJ)y, y> = |y|^2 - sum_k b_k |J^k y|^2 for ||J|| <= 2
    from substrat.bernoulli import bernoulli_b

    rng = np.random.default_rng(10)
    bvals = [bernoulli_b(k).float for k in range(1, 61)]
    for g in ALL_BUILTINS:
        for _ in range(25):
            mu = rng.standard_normal(g.d2)
            jm = j_matrix(g, mu)
            nrm = np.linalg.norm(jm, 2)
            if nrm > 0:
                mu = mu * (rng.uniform(0.2, 2.0) / nrm)
                jm = j_matrix(g, mu)
            y = rng.standard_normal(g.d1)
            mat = spectral_apply("T", 1j, g, mu)
            lhs = float(y @ mat.real @ y)
            acc = float(y @ y)
            vec = y.copy()
            for k in range(1, 61):
                vec = jm @ vec
                acc -= bvals[k - 1] * float(vec @ vec)
            assert abs(lhs - acc) <= 1e-10 * max(1.0, abs(acc))


def test_spectral_apply_near_pole():
    g = heisenberg(1)
    mu = _mu_with_b1(g, np.pi)  # |z| b = pi at z = 1
    with pytest.raises(NearPole):
        spectral_apply("T", 1.0, g, mu)


def test_srdet_trivial_and_scalar():
    g = heisenberg(1)
    assert abs(srdet_hS(1.0, g, [0.0]) - 1.0) < 1e-14
    mu = _mu_with_b1(g, 1.0)
    assert abs(srdet_hS(1.0, g, mu) - 1.0 / np.sinh(1.0)) < 1e-12


def test_srdet_square_matches_det():
    rng = np.random.default_rng(11)
    for g in ALL_BUILTINS:
        mu = rng.standard_normal(g.d2)
        z = 0.8 + 0.2j
        jm = j_matrix(g, mu).astype(complex)
        if abs(z.imag) * np.linalg.norm(jm, 2) >= np.pi:
            mu = mu * 0.5 / np.linalg.norm(jm, 2)
            jm = j_matrix(g, mu).astype(complex)
        a = z * jm
        sin_a = (scipy.linalg.expm(1j * a) - scipy.linalg.expm(-1j * a)) / 2j
        hs_a = a @ np.linalg.inv(sin_a)
        # remove the 0/0 ambiguity on the kernel: hs(0) = 1 there
        w, v = np.linalg.eigh((-jm @ jm).real)
        for i in range(len(w)):
            if w[i] < 1e-14:
                hs_a += np.outer(v[:, i], v[:, i]) * (1.0 - 0.0)
                # a @ inv(sin a) already treats the kernel correctly unless
                # sin_a is singular; free2step(3) kernel makes it singular.
        val = srdet_hS(z, g, mu)
        if np.isfinite(np.linalg.cond(sin_a)) and np.linalg.cond(sin_a) < 1e12:
            det = np.linalg.det(hs_a)
            assert abs(val ** 2 - det) <= 1e-10 * abs(det)


def test_srdet_homotopy_branch():
    """Dense determinant oracle along a homotopy from real z."""
    g = rotation_family(1, 2)
    mu = _mu_with_b1(g, 1.4)  # b = {1.4, 0.7}
    target = 1.0 + 0.5j

    def dense_det(z):
        jm = j_matrix(g, mu).astype(complex)
        a = z * jm
        sin_a = (scipy.linalg.expm(1j * a) - scipy.linalg.expm(-1j * a)) / 2j
        return np.linalg.det(a @ np.linalg.inv(sin_a))

    path = [1.0 + 0.5j * s for s in np.linspace(0.0, 1.0, 60)]
    sqrt_prev = np.sqrt(dense_det(path[0]).real)  # real positive at real z
    for z in path[1:]:
        det = dense_det(z)
        root = np.sqrt(det)
        if abs(root - sqrt_prev) > abs(-root - sqrt_prev):
            root = -root
        sqrt_prev = root
    val = srdet_hS(target, g, mu)
    assert abs(val - sqrt_prev) <= 1e-10 * abs(sqrt_prev)


def test_srdet_branch_region_violated():
    g = heisenberg(1)
    mu = _mu_with_b1(g, 2.0)
    with pytest.raises(BranchRegionViolated):
        srdet_hS(2j, g, mu)  # |Im z| * b = 4 > pi


def test_scalar_helpers_even_and_small():
    for w in (1e-5, 1e-2, 0.5, 1.2):
        assert abs(ht(w) - ht(-w)) < 1e-15
        assert abs(hs(w) - hs(-w)) < 1e-15
        assert abs(ht(w) - w / np.tan(w)) < 1e-12
        assert abs(hs(w) - w / np.sin(w)) < 1e-12
