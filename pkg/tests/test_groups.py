import json

import numpy as np
import pytest

from substrat.errors import NotAntisymmetric, SecondLayerDegenerate, UnsupportedDimensions
from substrat.groups import (
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


def test_build_group_heisenberg_tensor():
    c = np.zeros((1, 2, 2))
    c[0, 0, 1] = 1.0
    c[0, 1, 0] = -1.0
    g = build_group(c)
    assert (g.d1, g.d2) == (2, 1)


def test_build_group_rejects_not_antisymmetric():
    c = np.zeros((1, 2, 2))
    c[0, 0, 1] = 1.0  # missing the -1 partner
    with pytest.raises(NotAntisymmetric):
        build_group(c)


def test_build_group_rejects_dependent_second_layer():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    c = np.stack([rot, rot])  # two equal J matrices
    with pytest.raises(SecondLayerDegenerate):
        build_group(c)


def test_builtin_dimensions():
    assert group_dimensions(heisenberg(1)) == (2, 1, 3, 4)
    assert group_dimensions(htype(4, 3)) == (4, 3, 7, 10)
    assert group_dimensions(free2step(3)) == (3, 3, 6, 9)
    assert group_dimensions(rotation_family(1, 2)) == (4, 1, 5, 6)


def test_builtin_dispatch_and_parse():
    g = builtin_group("heisenberg", 1)
    assert g.Q == 4
    assert parse_builtin("htype:4,3").Q == 10
    assert parse_builtin("rotfam:1,2").d1 == 4
    with pytest.raises(UnsupportedDimensions):
        builtin_group("nonexistent")
    with pytest.raises(UnsupportedDimensions):
        htype(4, 5)  # Radon-Hurwitz bound for d1=4 is 3


def test_j_matrix_raw_heisenberg_convention():
    g = heisenberg(1)
    expected = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(j_matrix_raw(g, [1.0]), expected)
    assert np.allclose(j_matrix_raw(g, [2.5]), 2.5 * expected)


def test_j_matrix_zero_and_linearity():
    g = free2step(3)
    rng = np.random.default_rng(0)
    assert np.allclose(j_matrix(g, np.zeros(3)), 0.0)
    mu, nu = rng.standard_normal(3), rng.standard_normal(3)
    a, b = 0.7, -1.3
    lhs = j_matrix(g, a * mu + b * nu)
    rhs = a * j_matrix(g, mu) + b * j_matrix(g, nu)
    assert np.max(np.abs(lhs - rhs)) < 1e-14


def test_j_matrix_skewness_random():
    g = free2step(3)
    rng = np.random.default_rng(1)
    for _ in range(5):
        jm = j_matrix(g, rng.standard_normal(3))
        assert np.linalg.norm(jm + jm.T) < 1e-14


def test_j_matrix_injective_on_basis():
    for g in (heisenberg(2), htype(4, 3), free2step(4)):
        stack = np.stack([j_matrix(g, e).ravel() for e in np.eye(g.d2)])
        assert np.linalg.matrix_rank(stack) == g.d2


def test_htype_square_is_scalar():
    g = htype(4, 3)
    rng = np.random.default_rng(2)
    for _ in range(5):
        mu = rng.standard_normal(3)
        jm = j_matrix(g, mu)
        sq = -jm @ jm
        scalar = dual_inner(g, mu, mu) / g.d1
        assert np.max(np.abs(sq - scalar * np.eye(4))) < 1e-12 * max(1.0, scalar)


def test_htype_large_modules():
    # Radon-Hurwitz admissible pairs far from the quaternion base case.
    for d1, d2 in ((8, 7), (16, 8), (32, 9), (12, 3)):
        g = htype(d1, d2)
        rng = np.random.default_rng(3)
        mu = rng.standard_normal(d2)
        jm = j_matrix(g, mu)
        sq = -jm @ jm
        assert np.max(np.abs(sq - sq[0, 0] * np.eye(d1))) < 1e-11 * max(1.0, sq[0, 0])


def test_dual_inner_raw_heisenberg():
    g = heisenberg(1)
    tau = g.dual_basis_transform @ np.array([1.0])  # orthonormal coords of raw tau=1
    # HS norm^2 of [[0,1],[-1,0]] is 2
    assert abs(dual_inner(g, tau, tau) - 2.0) < 1e-12


def test_dual_inner_orthonormal_basis():
    for g in (heisenberg(2), htype(4, 3), free2step(3), rotation_family(1, 2)):
        eye = np.eye(g.d2)
        gram = np.array([[dual_inner(g, eye[k], eye[l]) for l in range(g.d2)]
                         for k in range(g.d2)])
        assert np.max(np.abs(gram - eye)) < 1e-13


def test_dual_inner_zero():
    g = heisenberg(1)
    assert dual_inner(g, [0.0], [0.0]) == 0.0


def test_group_file_roundtrip(tmp_path):
    g = free2step(3)
    path = tmp_path / "group.json"
    path.write_text(json.dumps({"d1": 3, "d2": 3, "c": g.structure.tolist()}))
    g2 = group_from_file(path)
    assert np.allclose(g2.structure, g.structure)


def test_group_file_rejects_nan(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"d1": 2, "d2": 1, "c": [[[0, NaN], [-1, 0]]]}')
    with pytest.raises(ValueError):
        group_from_file(path)


def test_group_file_shape_mismatch(tmp_path):
    path = tmp_path / "bad2.json"
    path.write_text('{"d1": 2, "d2": 2, "c": [[[0, 1], [-1, 0]]]}')
    with pytest.raises(ValueError):
        group_from_file(path)
