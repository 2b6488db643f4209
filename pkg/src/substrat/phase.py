"""Phase functions on the dual of the second layer and the construction of
nondegenerate critical points.

The oscillatory phase is Phi(y, v, mu) = -|y|^2 + Phi0(y, mu) + <mu, v> with

    Phi0(y, mu) = sum_{k>0} b_k |J_mu^k y|^2 = |y|^2 - <ht(i J_mu) y, y>,

and the search for a certified critical point follows the filtration of the
space of J matrices along powers of a generic direction: blocks of the
rescaled Hessian converge to Bernoulli-weighted Gram matrices whose
positivity is exactly the Hankel-determinant statement checked in
:mod:`substrat.bernoulli`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bernoulli import bernoulli_b
from .errors import (
    BadAnchorVector,
    FiltrationNotTerminating,
    NearPole,
    NonGenericDirection,
    SearchFailed,
    SeriesDiverges,
)
from .groups import StratifiedGroup, j_matrix
from .spectral import decompose, generic_eigencount, ht

POLE_TOL = 1e-8
RANK_TOL = 1e-9
MARGIN_TOL = 1e-7
DEFAULT_EPS_GRID = tuple(2.0 ** (-k) for k in range(12, 1, -1))  # ascending


def _pole_check(bvals):
    for b in np.atleast_1d(bvals):
        k = round(float(b) / np.pi)
        if k >= 1 and abs(float(b) - k * np.pi) < POLE_TOL:
            raise NearPole(f"eigenvalue {b} within {POLE_TOL:g} of {k} pi")


def phi0(g: StratifiedGroup, y, mu, method: str = "spectral", kmax: int = 60) -> float:
    """Phi0(y, mu), by spectral evaluation or by the truncated power series.

    The spectral route returns |y|^2 - <ht(i J_mu) y, y>; the series route
    sums b_k |J_mu^k y|^2 for k <= kmax and requires ||J_mu|| < pi.
    """
    y = np.asarray(y, dtype=float).reshape(g.d1)
    if method == "spectral":
        dec = decompose(g, mu)
        _pole_check(dec.eigenvalues)
        total = 0.0
        for b, proj in zip(dec.eigenvalues, dec.projections):
            total += (1.0 - float(ht(float(b)))) * float(y @ proj @ y)
        return total
    if method == "series":
        jm = j_matrix(g, mu)
        norm = np.linalg.norm(jm, 2)
        if norm >= np.pi:
            raise SeriesDiverges(f"||J_mu|| = {norm:.6g} >= pi")
        total = 0.0
        vec = y.copy()
        for k in range(1, kmax + 1):
            vec = jm @ vec
            total += bernoulli_b(k).float * float(vec @ vec)
        return total
    raise ValueError("method must be 'spectral' or 'series'")


def phi(g: StratifiedGroup, y, v, mu) -> float:
    """Full phase Phi = -|y|^2 + Phi0(y, mu) + <mu, v>."""
    y = np.asarray(y, dtype=float).reshape(g.d1)
    v = np.asarray(v, dtype=float).reshape(g.d2)
    mu = np.asarray(mu, dtype=float).reshape(g.d2)
    return -float(y @ y) + phi0(g, y, mu) + float(mu @ v)


def phi_mu_derivatives(g: StratifiedGroup, y, v, mu, order: int):
    """Gradient or Hessian of Phi in mu by Richardson-extrapolated central
    differences (steps h and h/2, h = 1e-4 (1 + |mu|)).

    v may be None, in which case derivatives of Phi0 alone are returned
    (the Hessian is independent of v either way).
    """
    y = np.asarray(y, dtype=float).reshape(g.d1)
    mu = np.asarray(mu, dtype=float).reshape(g.d2)
    vvec = np.zeros(g.d2) if v is None else np.asarray(v, dtype=float).reshape(g.d2)
    d2 = g.d2
    h = 1e-4 * (1.0 + float(np.linalg.norm(mu)))

    def f(m):
        return phi0(g, y, m)

    if order == 1:
        def grad(step):
            out = np.empty(d2)
            for k in range(d2):
                e = np.zeros(d2)
                e[k] = step
                out[k] = (f(mu + e) - f(mu - e)) / (2.0 * step)
            return out

        g1, g2 = grad(h), grad(h / 2.0)
        return (4.0 * g2 - g1) / 3.0 + vvec

    if order == 2:
        def hess(step):
            out = np.empty((d2, d2))
            base = f(mu)
            for k in range(d2):
                ek = np.zeros(d2)
                ek[k] = step
                out[k, k] = (f(mu + ek) - 2.0 * base + f(mu - ek)) / step ** 2
                for l in range(k + 1, d2):
                    el = np.zeros(d2)
                    el[l] = step
                    out[k, l] = (f(mu + ek + el) - f(mu + ek - el)
                                 - f(mu - ek + el) + f(mu - ek - el)) / (4.0 * step ** 2)
                    out[l, k] = out[k, l]
            return out

        h1, h2 = hess(h), hess(h / 2.0)
        out = (4.0 * h2 - h1) / 3.0
        return 0.5 * (out + out.T)

    raise ValueError("order must be 1 or 2")


def phi0_hessian_series(g: StratifiedGroup, y, mu, kmax: int = 80) -> np.ndarray:
    """Exact mu-Hessian of Phi0(y, .) from the power series (||J_mu|| < pi).

    Differentiates sum_k b_k |(J_mu + s J_a + t J_b)^k y|^2 in (s, t) at 0
    with the first- and second-insertion sums built by recurrence; accurate
    to series truncation, with no finite-difference noise.
    """
    y = np.asarray(y, dtype=float).reshape(g.d1)
    mu = np.asarray(mu, dtype=float).reshape(g.d2)
    m = j_matrix(g, mu)
    if np.linalg.norm(m, 2) >= np.pi:
        raise SeriesDiverges("series Hessian requires ||J_mu|| < pi")
    d2 = g.d2
    u = [y]
    for _ in range(kmax):
        u.append(m @ u[-1])
    a_cur = np.stack([g.j_on[a] @ u[0] for a in range(d2)])       # A^{(0)}
    b_cur = np.zeros((d2, d2, g.d1))                              # B^{(-1)}
    hess = np.zeros((d2, d2))
    for k in range(1, kmax + 1):
        bk = bernoulli_b(k).float
        sym = np.einsum("abi,i->ab", b_cur + np.swapaxes(b_cur, 0, 1), u[k])
        gram = np.einsum("ai,bi->ab", a_cur, a_cur)
        hess += 2.0 * bk * (sym + gram)
        if k < kmax:
            b_cur = np.einsum("ij,abj->abi", m, b_cur) \
                + np.einsum("aij,bj->abi", g.j_on, a_cur)
            a_cur = a_cur @ m.T + np.stack([g.j_on[a] @ u[k] for a in range(d2)])
    return 0.5 * (hess + hess.T)


@dataclass(frozen=True, eq=False)
class FiltrationBlocks:
    """Filtration data V = W_0 + ... + W_{r-1} and the scaled Hessian blocks.

    w_bases[j] has orthonormal columns spanning W_j in dual coordinates;
    hessian_w is (1/2) Hess Phi0(e, .) at eps * S_mu expressed in the
    concatenated W basis; m_eps is the diagonal of the block scaling
    (-1)^floor(j/2) eps^j.
    """

    w_bases: list
    hessian_w: np.ndarray
    m_eps: np.ndarray
    r: int
    eps: float
    s_matrix: np.ndarray
    anchor: np.ndarray

    @property
    def ranks(self):
        return [b.shape[1] for b in self.w_bases]

    def block(self, i: int, j: int) -> np.ndarray:
        off = np.cumsum([0] + self.ranks)
        return self.hessian_w[off[i]:off[i + 1], off[j]:off[j + 1]]


def filtration_blocks(g: StratifiedGroup, s_mu, e, eps: float,
                      rank_tol: float = RANK_TOL) -> FiltrationBlocks:
    """Build the nullspace filtration V_j, the complements W_j, and H(eps).

    V_j consists of the dual coordinates c with (sum_k c_k J_k) S^l e = 0 for
    l < j; rank decisions use singular values relative to the largest with
    tolerance rank_tol.  S must attain the generic eigenvalue count and e
    must project nontrivially on every eigenspace of S^2.
    """
    s_mu = np.asarray(s_mu, dtype=float).reshape(g.d2)
    e = np.asarray(e, dtype=float).reshape(g.d1)
    s_mat = j_matrix(g, s_mu)
    dec = decompose(g, s_mu)
    target = generic_eigencount(g)
    if dec.distinct_count != target:
        raise NonGenericDirection(
            f"direction has {dec.distinct_count} distinct eigenvalues, "
            f"generic count is {target}")
    eigenspaces = list(dec.projections)
    if dec.kernel_rank:
        eigenspaces.append(dec.kernel_projection)
    for proj in eigenspaces:
        if np.linalg.norm(proj @ e) <= 1e-6:
            raise BadAnchorVector("anchor has near-zero eigenspace projection")

    n_distinct = dec.distinct_count
    d2 = g.d2
    # constraint rows: for each power l, the map c -> J_c S^l e
    vec = e.copy()
    constraint_blocks = []
    v_bases = [np.eye(d2)]
    r = None
    for j in range(2 * n_distinct + 1):
        cols = np.stack([g.j_on[k] @ vec for k in range(d2)], axis=1)
        constraint_blocks.append(cols)
        stacked = np.concatenate(constraint_blocks, axis=0)
        _, sv, vh = np.linalg.svd(stacked)
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size else 0
        basis = vh[rank:].T  # nullspace, orthonormal columns
        v_bases.append(basis)
        if basis.shape[1] == 0:
            r = j + 1
            break
        vec = s_mat @ vec
    if r is None:
        raise FiltrationNotTerminating(
            f"filtration exceeds 2N = {2 * n_distinct} (rank decisions failed)")

    w_bases = []
    for j in range(r):
        vj, vj1 = v_bases[j], v_bases[j + 1]
        resid = vj - vj1 @ (vj1.T @ vj) if vj1.shape[1] else vj
        u, sv, _ = np.linalg.svd(resid, full_matrices=False)
        w = u[:, sv > 0.5]
        w_bases.append(w)
    total = sum(w.shape[1] for w in w_bases)
    if total != d2:
        raise FiltrationNotTerminating(
            f"W blocks span {total} of {d2} dimensions")

    basis = np.concatenate(w_bases, axis=1)
    # exact series Hessian where it converges; FD fallback near the poles
    if np.linalg.norm(eps * np.abs(s_mat), 2) < 0.9 * np.pi:
        hessian = phi0_hessian_series(g, e, eps * s_mu)
    else:
        hessian = phi_mu_derivatives(g, e, None, eps * s_mu, order=2)
    hessian_w = basis.T @ (0.5 * hessian) @ basis
    m_eps = np.concatenate([
        ((-1.0) ** (j // 2)) * eps ** j * np.ones(w.shape[1])
        for j, w in enumerate(w_bases)])
    return FiltrationBlocks(w_bases=w_bases, hessian_w=hessian_w, m_eps=m_eps,
                            r=r, eps=eps, s_matrix=s_mat, anchor=e)


@dataclass(frozen=True, eq=False)
class CriticalPointCertificate:
    """Certified nondegenerate critical point of the phase.

    The gradient of Phi(y0, v0, .) vanishes at mu0 by construction of v0 and
    the Hessian there is positive definite with margin min_abs_eigenvalue.
    """

    y0: np.ndarray
    v0: np.ndarray
    mu0: np.ndarray
    hessian: np.ndarray
    min_abs_eigenvalue: float
    epsilon_used: float
    S_direction: np.ndarray
    filtration_ranks: list

    def to_dict(self):
        return {
            "y0": self.y0.tolist(),
            "v0": self.v0.tolist(),
            "mu0": self.mu0.tolist(),
            "hessian": self.hessian.tolist(),
            "min_abs_eigenvalue": self.min_abs_eigenvalue,
            "epsilon_used": self.epsilon_used,
            "S_direction": self.S_direction.tolist(),
            "filtration_ranks": list(self.filtration_ranks),
        }


def find_critical(g: StratifiedGroup, seed: int = 0, eps_grid=None,
                  margin_tol: float = MARGIN_TOL) -> CriticalPointCertificate:
    """Search for a certified critical point (y0, v0, mu0) with |mu0| < 1.

    Samples random unit directions until one attains the generic eigenvalue
    count, anchors y0 at the sum of unit eigenspace representatives, and
    scans the epsilon grid (ascending, so mu0 is as small as the Hessian
    margin allows) for positive-definite Hessians of Phi0(y0, .).  Fixed
    seeds give identical output.
    """
    rng = np.random.default_rng(seed)
    target = generic_eigencount(g)
    s_dir = None
    for _ in range(256):
        cand = rng.standard_normal(g.d2)
        norm = float(np.linalg.norm(cand))
        if norm == 0.0:
            continue
        cand /= norm
        if decompose(g, cand).distinct_count == target:
            s_dir = cand
            break
    if s_dir is None:
        raise SearchFailed("no generic direction found in 256 draws")

    dec = decompose(g, s_dir)
    eigenspaces = list(dec.projections)
    if dec.kernel_rank:
        eigenspaces.append(dec.kernel_projection)
    e = np.zeros(g.d1)
    for proj in eigenspaces:
        for _ in range(64):
            w = proj @ rng.standard_normal(g.d1)
            norm = float(np.linalg.norm(w))
            if norm > 1e-9:
                e += w / norm
                break
        else:
            raise SearchFailed("could not draw an eigenspace representative")

    bmax = float(dec.eigenvalues[0]) if dec.M else 0.0
    if bmax <= 0.0:
        raise SearchFailed("direction has J = 0")
    pole_free = min(1.0, np.pi / bmax)
    grid = DEFAULT_EPS_GRID if eps_grid is None else tuple(eps_grid)
    e_sq = float(e @ e)

    best_margin = -np.inf
    best_eps = None
    for eps in grid:
        radius = eps * pole_free
        mu0 = radius * s_dir
        hess = phi_mu_derivatives(g, e, None, mu0, order=2)
        eigs = np.linalg.eigvalsh(hess)
        margin = float(eigs[0]) / e_sq
        if margin > best_margin:
            best_margin = margin
            best_eps = radius
        if eigs[0] > 0.0 and margin > margin_tol:
            v0 = -phi_mu_derivatives(g, e, None, mu0, order=1)
            filt = filtration_blocks(g, s_dir, e, radius)
            return CriticalPointCertificate(
                y0=e, v0=v0, mu0=mu0, hessian=hess,
                min_abs_eigenvalue=float(eigs[0]),
                epsilon_used=radius, S_direction=s_dir,
                filtration_ranks=filt.ranks)
    raise SearchFailed(
        f"no epsilon in grid certified; best normalized margin "
        f"{best_margin:.3e} at epsilon {best_eps}",
        best_margin=best_margin, best_epsilon=best_eps)
