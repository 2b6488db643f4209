"""Exact Bernoulli-derived coefficients and Hankel determinants.

The coefficients are b_k = (-1)^(k-1) 2^(2k) B_2k / (2k)! = 2 pi^(-2k) zeta(2k),
kept as exact rationals; positivity of the Hankel determinants det Z_{m,s}
with Z_{m,s} = (b_{m+i+j-1})_{i,j=1..s} is what certifies the phase Hessians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import zeta as _zeta

# Bernoulli numbers B_0, B_1, ... via the standard recurrence
# sum_{j=0}^{n} C(n+1, j) B_j = 0 (n >= 1), precomputed through B_60.
_BERNOULLI = [Fraction(1)]


def _extend_bernoulli(n: int):
    while len(_BERNOULLI) <= n:
        m = len(_BERNOULLI)
        acc = Fraction(0)
        for j, bj in enumerate(_BERNOULLI):
            acc += math.comb(m + 1, j) * bj
        _BERNOULLI.append(-acc / (m + 1))


def bernoulli_number(n: int) -> Fraction:
    """Exact Bernoulli number B_n (B_1 = -1/2 convention)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    _extend_bernoulli(n)
    return _BERNOULLI[n]


_extend_bernoulli(60)


@dataclass(frozen=True)
class BernoulliCoefficient:
    k: int
    exact: Fraction
    float: float


def bernoulli_b(k: int) -> BernoulliCoefficient:
    """Exact b_k together with its double approximation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    b2k = bernoulli_number(2 * k)
    exact = (-1) ** (k - 1) * Fraction(2 ** (2 * k), math.factorial(2 * k)) * b2k
    return BernoulliCoefficient(k=k, exact=exact, float=float(exact))


def bernoulli_b_zeta(k: int) -> float:
    """Independent float route 2 pi^(-2k) zeta(2k)."""
    return 2.0 * np.pi ** (-2 * k) * float(_zeta(2 * k))


def _fraction_det(mat) -> Fraction:
    # plain fraction-exact Gaussian elimination with partial pivoting
    n = len(mat)
    m = [row[:] for row in mat]
    det = Fraction(1)
    for col in range(n):
        pivot = None
        for row in range(col, n):
            if m[row][col] != 0:
                pivot = row
                break
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for row in range(col + 1, n):
            factor = m[row][col] * inv
            if factor == 0:
                continue
            for j in range(col, n):
                m[row][j] -= factor * m[col][j]
    return det


def hankel_det(m: int, s: int) -> Fraction:
    """Exact determinant of Z_{m,s} = (b_{m+i+j-1})_{i,j=1..s}."""
    if m < 0 or s < 1:
        raise ValueError("need m >= 0 and s >= 1")
    table = {k: bernoulli_b(k).exact for k in range(m + 1, m + 2 * s)}
    mat = [[table[m + i + j - 1] for j in range(1, s + 1)] for i in range(1, s + 1)]
    return _fraction_det(mat)


def zeta_series_det(m: int, s: int, kmax: int) -> float:
    """Positive-sum oracle for hankel_det:

        (2^s / (s! pi^(2s(s+m)))) * sum_{k_i <= kmax}
            (k_1...k_s)^(-2(2s+m-1)) prod_{i<j} (k_i^2 - k_j^2)^2.

    Monotone increasing in kmax; every term is nonnegative.  Evaluated via
    the Andreief identity, which rewrites the truncated multi-sum exactly as
    s! det(S(e - 2a - 2b))_{a,b=0..s-1} with S(p) = sum_{k<=kmax} k^(-p) and
    e = 2(2s + m - 1); the m = 0 cases have tails of order 1/kmax and need
    kmax in the millions, unreachable as a literal multi-sum.
    """
    if kmax < s:
        raise ValueError("kmax must be >= s")
    k = np.arange(1, kmax + 1, dtype=float)
    e = 2 * (2 * s + m - 1)
    powers = {p: float(np.sum(k ** (-p)))
              for p in {e - 2 * a - 2 * b for a in range(s) for b in range(s)}}
    mat = np.array([[powers[e - 2 * a - 2 * b] for b in range(s)]
                    for a in range(s)])
    total = math.factorial(s) * float(np.linalg.det(mat))
    prefactor = 2.0 ** s / (math.factorial(s) * np.pi ** (2 * s * (s + m)))
    return prefactor * total


def zeta_series_det_direct(m: int, s: int, kmax: int) -> float:
    """Literal multi-sum form (s <= 3, small kmax); the cross-check that the
    Andreief reorganization used by zeta_series_det is exact."""
    if kmax < s:
        raise ValueError("kmax must be >= s")
    if s > 3:
        raise ValueError("direct form supports s <= 3")
    k = np.arange(1, kmax + 1, dtype=float)
    expo = -2 * (2 * s + m - 1)
    if s == 1:
        total = float(np.sum(k ** expo))
    elif s == 2:
        k1 = k[:, None]
        k2 = k[None, :]
        total = float(np.sum((k1 * k2) ** expo * (k1 ** 2 - k2 ** 2) ** 2))
    else:
        k1 = k[:, None, None]
        k2 = k[None, :, None]
        k3 = k[None, None, :]
        van = ((k1 ** 2 - k2 ** 2) * (k1 ** 2 - k3 ** 2) * (k2 ** 2 - k3 ** 2)) ** 2
        total = float(np.sum((k1 * k2 * k3) ** expo * van))
    prefactor = 2.0 ** s / (math.factorial(s) * np.pi ** (2 * s * (s + m)))
    return prefactor * total
