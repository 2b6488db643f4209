"""Spectral decomposition of sqrt(-J_mu^2) and the matrix functions built on it.

The two scalar functions are the even meromorphic maps

    ht(w) = w / tan(w),    hs(w) = w / sin(w),

holomorphic off the nonzero multiples of pi.  On the eigenplane pair of
J_mu with eigenvalue +-ib the operator f(z J_mu) acts as the scalar
f(izb), which is well defined because both functions are even.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchRegionViolated, NearPole
from .groups import StratifiedGroup, j_matrix

POLE_TOL = 1e-8
DEFAULT_CLUSTER_TOL = 1e-8
_GENERIC_SEED = 1729


def ht(w):
    """w / tan(w), even; series near 0 for stability."""
    w = np.asarray(w)
    out = np.empty(w.shape, dtype=complex if np.iscomplexobj(w) else float)
    small = np.abs(w) < 1e-3
    ws = w[small]
    out[small] = 1.0 - ws ** 2 / 3.0 - ws ** 4 / 45.0
    wl = w[~small]
    out[~small] = wl / np.tan(wl)
    return out if out.shape else out[()]


def hs(w):
    """w / sin(w), even; series near 0 for stability."""
    w = np.asarray(w)
    out = np.empty(w.shape, dtype=complex if np.iscomplexobj(w) else float)
    small = np.abs(w) < 1e-3
    ws = w[small]
    out[small] = 1.0 + ws ** 2 / 6.0 + 7.0 * ws ** 4 / 360.0
    wl = w[~small]
    out[~small] = wl / np.sin(wl)
    return out if out.shape else out[()]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Clustered spectral data of sqrt(-J_mu^2).

    eigenvalues are strictly decreasing positive cluster means b_1 > ... > b_M;
    projections P_j are symmetric idempotents of rank 2 r_j; the kernel
    projection P_0 completes the identity.
    """

    eigenvalues: np.ndarray
    projections: np.ndarray
    ranks: np.ndarray
    kernel_projection: np.ndarray
    kernel_rank: int

    @property
    def M(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def distinct_count(self) -> int:
        """Distinct eigenvalues of -J_mu^2, the zero cluster included."""
        return self.M + (1 if self.kernel_rank > 0 else 0)

    def sqrt_matrix(self) -> np.ndarray:
        """Reassemble sqrt(-J_mu^2) = sum_j b_j P_j."""
        if self.M == 0:
            return np.zeros_like(self.kernel_projection)
        return np.einsum("j,jkl->kl", self.eigenvalues, self.projections)


def decompose(g: StratifiedGroup, mu, cluster_tol: float = DEFAULT_CLUSTER_TOL
              ) -> SpectralDecomposition:
    """Cluster the eigenvalues of the symmetric PSD matrix -J_mu^2.

    Square-rooted eigenvalues within cluster_tol * max of each other are
    merged into a single b_j (cluster mean); the zero cluster is the kernel.
    Kernel detection uses a floor of 1e-6 * max(b): the square root amplifies
    eigensolver roundoff on -J^2, so exact-zero eigenvalues surface as
    b ~ sqrt(eps) * max(b).  mu = 0 yields M = 0 and P_0 = I.
    """
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")
    jm = j_matrix(g, mu)
    a = -jm @ jm
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    b = np.sqrt(np.clip(w, 0.0, None))
    bmax = float(b[-1])
    d1 = g.d1
    if bmax <= 0.0:
        return SpectralDecomposition(
            eigenvalues=np.empty(0), projections=np.empty((0, d1, d1)),
            ranks=np.empty(0, dtype=int), kernel_projection=np.eye(d1),
            kernel_rank=d1)

    thresh = cluster_tol * bmax
    kernel_thresh = max(cluster_tol, 1e-6) * bmax
    order = np.argsort(b)[::-1]
    b_sorted = b[order]
    v_sorted = v[:, order]
    clusters = []
    start = 0
    for i in range(1, d1 + 1):
        if i == d1 or b_sorted[i - 1] - b_sorted[i] > thresh:
            clusters.append((start, i))
            start = i

    eigenvalues, projections, ranks = [], [], []
    kernel_projection = np.zeros((d1, d1))
    kernel_rank = 0
    for lo, hi in clusters:
        mean = float(np.mean(b_sorted[lo:hi]))
        block = v_sorted[:, lo:hi]
        proj = block @ block.T
        if mean <= kernel_thresh:
            kernel_projection = kernel_projection + proj
            kernel_rank += hi - lo
            continue
        size = hi - lo
        if size % 2 != 0:
            raise ValueError(
                "odd multiplicity cluster: nonzero eigenvalues of a skew "
                "matrix must pair; widen cluster_tol")
        eigenvalues.append(mean)
        projections.append(proj)
        ranks.append(size // 2)
    return SpectralDecomposition(
        eigenvalues=np.array(eigenvalues),
        projections=np.array(projections) if projections else np.empty((0, d1, d1)),
        ranks=np.array(ranks, dtype=int),
        kernel_projection=kernel_projection,
        kernel_rank=kernel_rank)


def generic_eigencount(g: StratifiedGroup, samples: int = 32, seed: int = _GENERIC_SEED,
                       cluster_tol: float = DEFAULT_CLUSTER_TOL) -> int:
    """Maximal distinct-eigenvalue count of -J_mu^2 over random unit mu.

    A given mu is considered generic when decompose(mu).distinct_count
    attains this value; misclassification is possible only on a measure-zero
    set of directions.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(samples):
        mu = rng.standard_normal(g.d2)
        norm = np.linalg.norm(mu)
        if norm == 0.0:
            continue
        best = max(best, decompose(g, mu / norm, cluster_tol).distinct_count)
    return best


def _check_poles(z_abs: float, eigenvalues: np.ndarray, tol: float = POLE_TOL):
    for b in np.atleast_1d(eigenvalues):
        m = z_abs * float(b)
        k = round(m / np.pi)
        if k >= 1 and abs(m - k * np.pi) < tol:
            raise NearPole(f"|z| b = {m:.12g} within {tol:g} of {k} pi")


def spectral_apply(which: str, z: complex, g: StratifiedGroup, mu,
                   cluster_tol: float = DEFAULT_CLUSTER_TOL) -> np.ndarray:
    """Evaluate ht(z J_mu) or hs(z J_mu) spectrally.

    On the eigenplane pair for b_j the operator is the scalar f(i z b_j)
    (f even); on the kernel it is f(0) = 1.  Raises NearPole when |z| b_j
    is within 1e-8 of a nonzero multiple of pi.
    """
    if which not in ("T", "S"):
        raise ValueError("which must be 'T' or 'S'")
    dec = decompose(g, mu, cluster_tol)
    _check_poles(abs(z), dec.eigenvalues)
    f = ht if which == "T" else hs
    out = dec.kernel_projection.astype(complex)
    for b, proj in zip(dec.eigenvalues, dec.projections):
        out = out + complex(f(1j * z * b)) * proj
    return out


def srdet_hS(z: complex, g: StratifiedGroup, mu,
             cluster_tol: float = DEFAULT_CLUSTER_TOL) -> complex:
    """sqrt det hs(z J_mu) as the product of one factor per eigenvalue pair.

    Equals prod_j hs(i z b_j)^(r_j); continuous on ||Im(z) J_mu|| < pi and
    positive at real z > 0, hence consistent with the principal branch there.
    """
    dec = decompose(g, mu, cluster_tol)
    bmax = float(dec.eigenvalues[0]) if dec.M else 0.0
    if abs(z.imag if isinstance(z, complex) else 0.0) * bmax >= np.pi:
        raise BranchRegionViolated(
            f"||Im(z) J_mu|| = {abs(complex(z).imag) * bmax:.6g} >= pi")
    val = complex(1.0)
    for b, r in zip(dec.eigenvalues, dec.ranks):
        val *= complex(hs(1j * complex(z) * b)) ** int(r)
    return val
