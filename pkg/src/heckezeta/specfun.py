"""
Hurwitz zeta function for complex order by Euler-Maclaurin summation.

    zeta(s, a) = sum_{n>=0} (n + a)^(-s)

is split into ``M`` direct terms, the integral of the tail, and ``K``
Bernoulli corrections.  The first omitted correction serves as the error
estimate; ``M`` is doubled until that estimate is below ``1e-13 |value|``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

DEFAULT_M = 30
DEFAULT_K = 15
# left of the critical strip the direct sum cancels against the integral term,
# so fewer direct terms and more corrections are used there
NEG_M = 6
NEG_K = 30
_REL_TARGET = 1e-13
_M_CAP = 1 << 16


class PoleError(ArithmeticError):
    """Evaluation at (or numerically on top of) a pole."""


@lru_cache(maxsize=None)
def _bernoulli_even(kmax: int) -> tuple:
    """B_2, B_4, ..., B_{2 kmax} divided by the matching factorial."""
    # Akiyama-Tanigawa recurrence on exact rationals
    n_max = 2 * kmax
    a = [Fraction(0)] * (n_max + 1)
    b = []
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        b.append(a[0])
    return tuple(float(b[2 * k] / math.factorial(2 * k)) for k in range(1, kmax + 1))


@dataclass(frozen=True)
class HurwitzEval:
    s: complex
    a: float
    value: complex
    est_error: float


def _em(s: complex, a: float, M: int, K: int) -> tuple[complex, float]:
    n = np.arange(M) + a
    direct = np.sum(np.exp(-s * np.log(n)))
    x = M + a
    lx = math.log(x)
    xs = cmath.exp(-s * lx)
    total = direct + x * xs / (s - 1) + 0.5 * xs
    coef = _bernoulli_even(K + 1)
    poch = s  # (s)_{2k-1}
    xpow = xs / x  # x^(-s-1)
    term = 0j
    for k in range(1, K + 2):
        term = coef[k - 1] * poch * xpow
        if k == K + 1:
            break
        total += term
        poch *= (s + 2 * k - 1) * (s + 2 * k)
        xpow /= x * x
    return complex(total), abs(term)


def hurwitz_zeta(s: complex, a: float, M: int = DEFAULT_M, K: int = DEFAULT_K) -> HurwitzEval:
    s = complex(s)
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if s == 1:
        raise PoleError("zeta(s, a) has a pole at s = 1")
    if s.real < 0 and (M, K) == (DEFAULT_M, DEFAULT_K):
        M, K = NEG_M, NEG_K
    # the Bernoulli tail only behaves once M is comparable to |s|
    M = max(M, int(abs(s) / 2) + 1)
    while True:
        val, err = _em(s, a, M, K)
        if err <= _REL_TARGET * abs(val) or M >= _M_CAP:
            return HurwitzEval(s, a, val, err)
        M *= 2


def hurwitz_derivatives(s: complex, a: float, m_max: int) -> list[complex]:
    """``d^m/da^m zeta(s, a) = (-1)^m (s)_m zeta(s+m, a)`` for ``m = 0..m_max``."""
    s = complex(s)
    out = []
    poch = 1.0 + 0j
    for m in range(m_max + 1):
        if s + m == 1:
            raise PoleError(f"pole hit at derivative order m={m}")
        out.append((-1) ** m * poch * hurwitz_zeta(s + m, a).value)
        poch *= s + m
    return out


def hurwitz_zeta_shifted(s: complex, a: float, count: int) -> np.ndarray:
    """``zeta(s + p, a)`` for ``p = 0..count-1``."""
    return np.array([hurwitz_zeta(complex(s) + p, a).value for p in range(count)])


def squared_power(w: complex, s: complex) -> complex:
    """``(w^2)^s`` with the principal logarithm of ``w^2``."""
    if w == 0:
        raise ValueError("squared_power is undefined at w = 0")
    return cmath.exp(complex(s) * cmath.log(complex(w) * complex(w)))


def pochhammer(s: complex, m: int) -> complex:
    out = 1.0 + 0j
    for t in range(m):
        out *= s + t
    return out
