"""2-step stratified groups defined by structure constants.

A group is stored through the raw bracket tensor c[l, i, j], meaning
[X_i, X_j] = sum_l c[l, i, j] U_l for the chosen bases of the two layers.
The input first-layer basis is treated as orthonormal by fiat.  Dual
coordinates on the second layer are Gram-orthonormalized against the
Hilbert-Schmidt inner product <A, B> = tr(A^T B) of the associated skew
matrices, and every downstream module works in those orthonormal
coordinates; raw coordinates appear only at construction time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NotAntisymmetric, SecondLayerDegenerate, UnsupportedDimensions

GRAM_DEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StratifiedGroup:
    """Immutable group data; safe for unrestricted concurrent reads.

    Attributes
    ----------
    d1, d2 : int
        Dimensions of the first and second layer.
    structure : ndarray, shape (d2, d1, d1)
        Raw bracket tensor.
    dual_basis_transform : ndarray, shape (d2, d2)
        Maps raw dual coordinates to orthonormal ones.
    raw_from_orthonormal : ndarray, shape (d2, d2)
        Inverse of ``dual_basis_transform``.
    j_raw : ndarray, shape (d2, d1, d1)
        Skew matrices of the raw dual basis vectors.
    j_on : ndarray, shape (d2, d1, d1)
        Skew matrices of the orthonormalized dual basis vectors.
    """

    d1: int
    d2: int
    structure: np.ndarray
    dual_basis_transform: np.ndarray
    raw_from_orthonormal: np.ndarray
    j_raw: np.ndarray
    j_on: np.ndarray

    def __post_init__(self):
        for name in ("structure", "dual_basis_transform", "raw_from_orthonormal",
                     "j_raw", "j_on"):
            getattr(self, name).flags.writeable = False

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    @property
    def Q(self) -> int:
        return self.d1 + 2 * self.d2

    def j_opnorm_bound(self) -> float:
        """Upper bound for ||J_mu|| over unit mu in orthonormal coordinates."""
        return float(np.sqrt(sum(
            np.linalg.norm(self.j_on[k], 2) ** 2 for k in range(self.d2))))


def _validate_vec(v, n, name):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def build_group(structure) -> StratifiedGroup:
    """Construct a group from a raw bracket tensor of shape (d2, d1, d1).

    Antisymmetry is checked exactly up to a relative 1e-12 tolerance and the
    d2 basis matrices J must be linearly independent; their Gram matrix under
    the Hilbert-Schmidt product is orthonormalized by symmetric
    eigendecomposition (basis-order independent).
    """
    c = np.array(structure, dtype=float)
    if c.ndim != 3 or c.shape[1] != c.shape[2]:
        raise ValueError(f"structure tensor must have shape (d2, d1, d1), got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("structure tensor has non-finite entries")
    d2, d1, _ = c.shape
    if d1 < 1 or d2 < 1:
        raise ValueError("d1 and d2 must be positive")
    scale = max(float(np.max(np.abs(c))), 1.0)
    asym = float(np.max(np.abs(c + np.transpose(c, (0, 2, 1)))))
    if asym > 1e-12 * scale:
        raise NotAntisymmetric(
            f"max |c[l][i][j] + c[l][j][i]| = {asym:.3e} exceeds tolerance")

    # J of the l-th raw dual basis vector is the l-th slice of the tensor.
    j_raw = c.copy()
    gram = np.einsum("kij,lij->kl", j_raw, j_raw)
    w, v = np.linalg.eigh(gram)
    if w[0] < GRAM_DEGENERACY_TOL * w[-1] or w[-1] <= 0.0:
        raise SecondLayerDegenerate(
            f"Gram matrix of J basis nearly singular (eigenvalues {w})")
    dual_basis_transform = (v * np.sqrt(w)) @ v.T
    raw_from_orthonormal = (v / np.sqrt(w)) @ v.T
    j_on = np.einsum("lk,lij->kij", raw_from_orthonormal, j_raw)
    return StratifiedGroup(d1=d1, d2=d2, structure=c,
                           dual_basis_transform=dual_basis_transform,
                           raw_from_orthonormal=raw_from_orthonormal,
                           j_raw=j_raw, j_on=j_on)


# ---------------------------------------------------------------------------
# Builtin families
# ---------------------------------------------------------------------------

_ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def heisenberg(n: int) -> StratifiedGroup:
    """Heisenberg group H_n: d1 = 2n, d2 = 1."""
    if n < 1:
        raise UnsupportedDimensions("heisenberg requires n >= 1")
    c = np.zeros((1, 2 * n, 2 * n))
    for i in range(n):
        c[0, 2 * i:2 * i + 2, 2 * i:2 * i + 2] = _ROT
    return build_group(c)


def free2step(d1: int) -> StratifiedGroup:
    """Free 2-step nilpotent group on d1 generators; d2 = C(d1, 2)."""
    if d1 < 2:
        raise UnsupportedDimensions("free2step requires d1 >= 2")
    pairs = list(combinations(range(d1), 2))
    c = np.zeros((len(pairs), d1, d1))
    for l, (i, j) in enumerate(pairs):
        c[l, i, j] = 1.0
        c[l, j, i] = -1.0
    return build_group(c)


def rotation_family(*frequencies: float) -> StratifiedGroup:
    """d2 = 1 group with J = blockdiag(f_k R) over the given frequencies."""
    freqs = [float(f) for f in (frequencies[0] if len(frequencies) == 1
                                and isinstance(frequencies[0], (list, tuple))
                                else frequencies)]
    if not freqs or any(f == 0.0 for f in freqs):
        raise UnsupportedDimensions("rotation_family requires nonzero frequencies")
    n = len(freqs)
    c = np.zeros((1, 2 * n, 2 * n))
    for i, f in enumerate(freqs):
        c[0, 2 * i:2 * i + 2, 2 * i:2 * i + 2] = f * _ROT
    return build_group(c)


def _cd_conj(x):
    y = x.copy()
    y[1:] *= -1.0
    return y


def _cd_mult(x, y):
    # Cayley-Dickson product; doubles R -> C -> H -> O.
    n = x.shape[0]
    if n == 1:
        return x * y
    h = n // 2
    a, b = x[:h], x[h:]
    c, d = y[:h], y[h:]
    return np.concatenate([
        _cd_mult(a, c) - _cd_mult(_cd_conj(d), b),
        _cd_mult(d, a) + _cd_mult(b, _cd_conj(c)),
    ])


def _left_mult_matrices(dim):
    """Left multiplication by the imaginary units of the dim-dimensional
    Cayley-Dickson algebra (dim in {2, 4, 8})."""
    mats = []
    basis = np.eye(dim)
    for k in range(1, dim):
        cols = [_cd_mult(basis[k], basis[m]) for m in range(dim)]
        mats.append(np.stack(cols, axis=1))
    return mats


def _clifford_generators(c: int):
    """Anticommuting skew matrices J_i on R^(2^c) with J_i^2 = -I.

    Yields the maximal Radon-Hurwitz count: 1, 3, 7 generators for
    c = 1, 2, 3 and m(c) = m(c-4) + 8 via tensoring with the dimension-16
    module of the rank-8 Clifford algebra.
    """
    if c == 0:
        return []
    if c == 1:
        return _left_mult_matrices(2)
    if c == 2:
        return _left_mult_matrices(4)[:3]
    if c == 3:
        return _left_mult_matrices(8)
    # c >= 4: recurse through the 16-dimensional rank-8 module.
    oct_gens = _left_mult_matrices(8)
    eye8 = np.eye(8)
    k_gens = [np.block([[g, np.zeros((8, 8))], [np.zeros((8, 8)), -g]])
              for g in oct_gens]
    k_gens.append(np.block([[np.zeros((8, 8)), -eye8], [eye8, np.zeros((8, 8))]]))
    omega = k_gens[0]
    for g in k_gens[1:]:
        omega = omega @ g
    sub = _clifford_generators(c - 4)
    eye_sub = np.eye(2 ** (c - 4))
    gens = [np.kron(a, omega) for a in sub]
    gens += [np.kron(eye_sub, k) for k in k_gens]
    return gens


def _max_htype_center_dim(c: int) -> int:
    if c == 0:
        return 0
    if c <= 3:
        return 2 ** c - 1
    return _max_htype_center_dim(c - 4) + 8


def htype(d1: int, d2: int) -> StratifiedGroup:
    """Heisenberg-type group: J_mu^2 = -q(mu) I for a positive form q.

    Exists iff d2 does not exceed the Radon-Hurwitz number of d1 minus one;
    otherwise raises UnsupportedDimensions.
    """
    if d1 < 2 or d2 < 1:
        raise UnsupportedDimensions("htype requires d1 >= 2, d2 >= 1")
    c_two = 0
    odd = d1
    while odd % 2 == 0:
        odd //= 2
        c_two += 1
    if d2 > _max_htype_center_dim(c_two):
        raise UnsupportedDimensions(
            f"no Clifford module: d2 = {d2} exceeds bound "
            f"{_max_htype_center_dim(c_two)} for d1 = {d1}")
    gens = _clifford_generators(c_two)[:d2]
    eye_odd = np.eye(odd)
    tensor = np.stack([np.kron(eye_odd, g) for g in gens])
    # Defensive check of the Clifford relations.
    for a in range(d2):
        for b in range(d2):
            acomm = tensor[a] @ tensor[b] + tensor[b] @ tensor[a]
            want = -2.0 * np.eye(d1) if a == b else np.zeros((d1, d1))
            if np.max(np.abs(acomm - want)) > 1e-12:
                raise AssertionError("Clifford relations violated in htype build")
    return build_group(tensor)


_BUILTINS = {
    "heisenberg": lambda *p: heisenberg(int(p[0])),
    "htype": lambda *p: htype(int(p[0]), int(p[1])),
    "free2step": lambda *p: free2step(int(p[0])),
    "rotation_family": lambda *p: rotation_family(*[float(x) for x in p]),
    "rotfam": lambda *p: rotation_family(*[float(x) for x in p]),
}


def builtin_group(name: str, *params) -> StratifiedGroup:
    """Dispatch to a builtin family by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnsupportedDimensions(f"unknown builtin group '{name}'") from None
    try:
        return factory(*params)
    except (IndexError, TypeError) as exc:
        raise UnsupportedDimensions(f"bad parameters for builtin '{name}': {params}") from exc


def parse_builtin(spec: str) -> StratifiedGroup:
    """Parse CLI names like 'heisenberg:1', 'htype:4,3', 'rotfam:1,2'."""
    name, _, args = spec.partition(":")
    params = [a for a in args.split(",") if a] if args else []
    return builtin_group(name.strip(), *params)


def _reject_constant(s):
    raise ValueError(f"non-finite JSON constant {s!r} not allowed in group files")


def group_from_file(path) -> StratifiedGroup:
    """Read a group definition file: JSON with fields d1, d2, c."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh, parse_constant=_reject_constant)
    for key in ("d1", "d2", "c"):
        if key not in doc:
            raise ValueError(f"group file missing field '{key}'")
    d1, d2 = int(doc["d1"]), int(doc["d2"])
    c = np.asarray(doc["c"], dtype=float)
    if c.shape != (d2, d1, d1):
        raise ValueError(f"tensor shape {c.shape} does not match (d2, d1, d1) = "
                         f"({d2}, {d1}, {d1})")
    return build_group(c)


# ---------------------------------------------------------------------------
# Basic operations
# ---------------------------------------------------------------------------

def j_matrix(g: StratifiedGroup, mu) -> np.ndarray:
    """Skew matrix J_mu for mu in orthonormal dual coordinates."""
    mu = _validate_vec(mu, g.d2, "mu")
    return np.einsum("k,kij->ij", mu, g.j_on)


def j_matrix_raw(g: StratifiedGroup, tau) -> np.ndarray:
    """Skew matrix J for raw dual coordinates (construction convention)."""
    tau = _validate_vec(tau, g.d2, "tau")
    return np.einsum("k,kij->ij", tau, g.j_raw)


def j_matrix_batch(g: StratifiedGroup, mus: np.ndarray) -> np.ndarray:
    """J_mu for a batch of orthonormal dual vectors, shape (n, d2) -> (n, d1, d1)."""
    mus = np.asarray(mus, dtype=float)
    return np.einsum("nk,kij->nij", mus, g.j_on)


def raw_to_orthonormal(g: StratifiedGroup, tau) -> np.ndarray:
    tau = _validate_vec(tau, g.d2, "tau")
    return g.dual_basis_transform @ tau


def orthonormal_to_raw(g: StratifiedGroup, mu) -> np.ndarray:
    mu = _validate_vec(mu, g.d2, "mu")
    return g.raw_from_orthonormal @ mu


def group_dimensions(g: StratifiedGroup):
    """Return (d1, d2, d, Q)."""
    return g.d1, g.d2, g.d, g.Q


def dual_inner(g: StratifiedGroup, mu, nu) -> float:
    """Hilbert-Schmidt pairing <J_mu, J_nu>; the dual inner product."""
    jm = j_matrix(g, mu)
    jn = j_matrix(g, nu)
    return float(np.sum(jm * jn))


def j_norm(g: StratifiedGroup, mu) -> float:
    """Operator norm ||J_mu|| (the largest eigenvalue of sqrt(-J_mu^2))."""
    return float(np.linalg.norm(j_matrix(g, mu), 2))
