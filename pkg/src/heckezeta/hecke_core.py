"""
Nearest-multiple continued fractions for the Hecke triangle groups G_q.

A real number ``x`` in the fundamental interval ``[-lam/2, lam/2]`` is
expanded as::

    x = a0*lam - 1/(a1*lam - 1/(a2*lam - ...))
      = T^a0 S T^a1 S T^a2 ... 0

with ``lam = 2 cos(pi/q)``, ``S = [[0, -1], [1, 0]]`` and
``T = [[1, lam], [0, 1]]``.  Digits are produced by the map
``f(x) = -1/x - <-1/x> lam`` where ``<y>`` is the nearest multiple of ``lam``
(regular mode) or its shifted variant (dual mode, fundamental interval
``[-R, R]``).

Admissible digit strings are characterized by a finite list of forbidden
block patterns; :func:`is_regular` implements them as pattern rules.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

REGULAR = "regular"
DUAL = "dual"
_MODES = (REGULAR, DUAL)

# slack for interval membership after floating point rounding
_EDGE_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


@dataclass(frozen=True)
class HeckeContext:
    """All q-dependent constants of the Hecke group G_q."""

    q: int
    lam: float
    h: int
    kappa: int
    R: float
    r: float
    parity: str

    @property
    def even(self) -> bool:
        return self.parity == "even"

    @property
    def lambda_(self) -> float:
        return self.lam


def make_context(q: int) -> HeckeContext:
    if int(q) != q or q < 3:
        raise DomainError(f"q must be an integer >= 3, got {q!r}")
    q = int(q)
    lam = 1.0 if q == 3 else 2.0 * math.cos(math.pi / q)
    if q == 6:
        lam = math.sqrt(3.0)
    elif q == 4:
        lam = math.sqrt(2.0)
    if q % 2 == 0:
        h = (q - 2) // 2
        kappa = h
        R = 1.0
        parity = "even"
    else:
        h = (q - 3) // 2
        kappa = 2 * h + 1
        # positive root of R^2 + (2 - lam) R - 1 = 0, written without cancellation
        b = 2.0 - lam
        R = 2.0 / (b + math.sqrt(b * b + 4.0))
        parity = "odd"
    return HeckeContext(q=q, lam=lam, h=h, kappa=kappa, R=R, r=R - lam, parity=parity)


def _afloor(y: float) -> int:
    """Floor with the asymmetric convention: n < y <= n+1 for y > 0."""
    if y > 0:
        return math.ceil(y) - 1
    return math.floor(y)


def nearest_multiple(ctx: HeckeContext, x: float, mode: str = REGULAR) -> int:
    if mode == REGULAR:
        return _afloor(x / ctx.lam + 0.5)
    if mode == DUAL:
        if x >= 0:
            return _afloor(x / ctx.lam + 1.0 - ctx.R / ctx.lam)
        return _afloor(x / ctx.lam + ctx.R / ctx.lam)
    raise DomainError(f"unknown mode {mode!r}")


def _half_width(ctx: HeckeContext, mode: str) -> float:
    return ctx.lam / 2 if mode == REGULAR else ctx.R


def step(ctx: HeckeContext, x: float, mode: str = REGULAR) -> tuple[int, float]:
    """One application of the generating map.

    Returns ``(digit, next)``; ``(0, 0.0)`` signals termination at ``x == 0``.
    """
    w = _half_width(ctx, mode)
    if not abs(x) <= w + _EDGE_TOL:
        raise DomainError(f"x={x!r} outside [-{w}, {w}] ({mode})")
    if x == 0:
        return 0, 0.0
    y = -1.0 / x
    a = nearest_multiple(ctx, y, mode)
    if a == 0:
        # only reachable at the dual endpoints +-R, where the floor formula degenerates
        raise DomainError(f"x={x!r} has no nonzero digit ({mode})")
    return a, y - a * ctx.lam


@dataclass(frozen=True)
class CFExpansion:
    """Leading digit ``a0`` and the remaining digits.

    ``complete`` marks a terminating expansion.  ``period`` (if set) means the
    last ``period`` digits repeat forever; it is used by :func:`evaluate`.
    """

    a0: int
    digits: tuple[int, ...]
    kind: str = REGULAR
    complete: bool = True
    period: Optional[int] = None

    @property
    def preperiod(self) -> Optional[int]:
        if self.period is None:
            return None
        return len(self.digits) - self.period


def _periodic_candidates(digits: Sequence[int], min_reps: int = 3):
    """Pairs ``(k, p)`` such that ``digits[k:]`` repeats a ``p``-block over a
    long stretch, ordered by ``k + p``."""
    n = len(digits)
    min_run = max(6, n // 3)
    found = []
    for p in range(1, n // min_reps + 1):
        need = max(min_reps * p, min_run) - p
        streak = 0
        # streak = number of consecutive t' >= t with digits[t'] == digits[t' - p]
        for t in range(n - 1, p - 1, -1):
            streak = streak + 1 if digits[t] == digits[t - p] else 0
            if streak >= need:
                found.append((t, p))
    found.sort()
    return [(end - p, p) for end, p in found]


def _snap(y: float, scale: float) -> float:
    # a remainder at rounding level of the subtraction is an exact zero;
    # subnormals too, since their reciprocal overflows
    if abs(y) <= 1e-13 * abs(scale) or abs(y) < sys.float_info.min:
        return 0.0
    return y


def expand(ctx: HeckeContext, x: float, mode: str = REGULAR, max_digits: int = 40) -> CFExpansion:
    if max_digits < 1:
        raise DomainError("max_digits must be >= 1")
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    a0 = nearest_multiple(ctx, x, mode)
    y = _snap(x - a0 * ctx.lam, x)
    digits: list[int] = []
    while y != 0 and len(digits) < max_digits:
        a, nxt = step(ctx, y, mode)
        digits.append(a)
        y = _snap(nxt, 1.0 / y)
    complete = y == 0
    if complete:
        return CFExpansion(a0, tuple(digits), mode, True)
    # flag an eventually periodic tail only when it reproduces x
    for k, p in _periodic_candidates(digits):
        cand = CFExpansion(a0, tuple(digits[: k + p]), mode, False, p)
        try:
            v = evaluate(ctx, cand)
        except (DomainError, ArithmeticError):
            continue
        if abs(v - x) <= 1e-12 * max(1.0, abs(x)):
            return cand
    return CFExpansion(a0, tuple(digits), mode, False)


# ---------------------------------------------------------------- Moebius words

S_MAT = np.array([[0.0, -1.0], [1.0, 0.0]])


def T_mat(ctx: HeckeContext, a: int = 1) -> np.ndarray:
    return np.array([[1.0, a * ctx.lam], [0.0, 1.0]])


def ST_mat(ctx: HeckeContext, a: int) -> np.ndarray:
    """Matrix of the local inverse z -> -1/(z + a*lam)."""
    return np.array([[0.0, -1.0], [1.0, a * ctx.lam]])


@dataclass(frozen=True)
class MoebiusWord:
    """2x2 matrix of determinant one together with the digit word it came from."""

    matrix: np.ndarray
    word: tuple = field(default=())

    def __call__(self, z):
        (a, b), (c, d) = self.matrix
        return (a * z + b) / (c * z + d)

    def derivative(self, z):
        c, d = self.matrix[1]
        return 1.0 / (c * z + d) ** 2

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def __matmul__(self, other: "MoebiusWord") -> "MoebiusWord":
        return MoebiusWord(self.matrix @ other.matrix, self.word + other.word)


def word_matrix(ctx: HeckeContext, a0: int, digits: Sequence[int]) -> MoebiusWord:
    """``T^a0 S T^a1 ... S T^an`` as a :class:`MoebiusWord`."""
    m = T_mat(ctx, a0)
    for a in digits:
        m = m @ ST_mat(ctx, a)
    return MoebiusWord(m, (a0, *digits))


def attracting_fixed_point(m: np.ndarray) -> float:
    """Attracting fixed point of a hyperbolic Moebius matrix."""
    (a, b), (c, d) = m
    tr = a + d
    if abs(tr) <= 2.0:
        raise DomainError(f"matrix with trace {tr} is not hyperbolic")
    if c == 0:
        raise DomainError("fixed point at infinity")
    disc = math.sqrt((d - a) ** 2 + 4.0 * b * c)
    roots = ((a - d + disc) / (2 * c), (a - d - disc) / (2 * c))
    # attracting root has |c z + d| > 1
    return max(roots, key=lambda z: abs(c * z + d))


def evaluate(ctx: HeckeContext, e: CFExpansion) -> float:
    digits = list(e.digits)
    if e.period is not None and not e.complete:
        k = len(digits) - e.period
        per = word_matrix(ctx, 0, digits[k:]).matrix
        tail = attracting_fixed_point(per)
        head = word_matrix(ctx, e.a0, digits[:k])
        return float(head(tail))
    # backward recursion; same value as the word matrix applied to 0
    z = 0.0
    for a in reversed(digits):
        den = z + a * ctx.lam
        if den == 0:
            raise ArithmeticError(f"degenerate word {(e.a0, *digits)}")
        z = -1.0 / den
    return z + e.a0 * ctx.lam


# ---------------------------------------------------------------- grammar

def _same_sign_run(digits: Sequence[int], start: int, sign: int, value: int, count: int) -> bool:
    if start + count > len(digits):
        return False
    return all(digits[start + t] == sign * value for t in range(count))


def _block_at(ctx: HeckeContext, digits: Sequence[int], k: int) -> bool:
    """True if a forbidden block starts at position ``k``."""
    a = digits[k]
    sign = 1 if a > 0 else -1
    h = ctx.h
    n = len(digits)
    if ctx.q == 3:
        if abs(a) == 1:
            return True
        return abs(a) == 2 and k + 1 < n and digits[k + 1] * sign > 0
    if ctx.even:
        # (+-1)^h followed by any digit of the same sign; covers (+-1)^(h+1)
        return _same_sign_run(digits, k, sign, 1, h) and k + h < n and digits[k + h] * sign > 0
    if _same_sign_run(digits, k, sign, 1, h + 1):
        return True
    if not _same_sign_run(digits, k, sign, 1, h):
        return False
    j = k + h
    if j >= n or digits[j] != 2 * sign:
        return False
    j += 1
    if not _same_sign_run(digits, j, sign, 1, h):
        return False
    j += h
    return j < n and digits[j] * sign > 0


def is_regular(ctx: HeckeContext, digits: Sequence[int], mode: str = REGULAR) -> bool:
    digits = [int(a) for a in digits]
    if any(a == 0 for a in digits):
        raise DomainError("digits must be nonzero")
    if mode == DUAL:
        digits = digits[::-1]
    elif mode != REGULAR:
        raise DomainError(f"unknown mode {mode!r}")
    return not any(_block_at(ctx, digits, k) for k in range(len(digits)))


def longest_block(ctx: HeckeContext) -> int:
    """Length of the longest forbidden pattern (tail families count once)."""
    if ctx.q == 3:
        return 2
    if ctx.even:
        return ctx.h + 1
    return 2 * ctx.h + 2


def is_cyclically_regular(ctx: HeckeContext, digits: Sequence[int]) -> bool:
    """Regularity of the bi-infinite periodic word, checked across the seam."""
    digits = list(digits)
    if not digits:
        return True
    reps = -(-longest_block(ctx) // len(digits)) + 1
    return is_regular(ctx, digits * reps)


# ---------------------------------------------------------------- order

LESS, EQUAL, GREATER = -1, 0, 1


def lex_compare(x: CFExpansion, y: CFExpansion) -> int:
    """Order of two regular expansions; agrees with the numeric order."""
    if x.kind != REGULAR or y.kind != REGULAR:
        raise DomainError("lex_compare needs regular expansions")
    if x.a0 != y.a0:
        return LESS if x.a0 < y.a0 else GREATER
    a, b = x.digits, y.digits
    n = 0
    while n < len(a) and n < len(b) and a[n] == b[n]:
        n += 1
    if n == len(a) and n == len(b):
        return EQUAL
    if n == len(a):
        return LESS if b[n] < 0 else GREATER
    if n == len(b):
        return LESS if a[n] > 0 else GREATER
    an, bn = a[n], b[n]
    if an * bn < 0:
        return LESS if an > 0 else GREATER
    return LESS if an < bn else GREATER


# ---------------------------------------------------------------- special words

def half_lambda_word(ctx: HeckeContext) -> tuple[int, ...]:
    """Digits of -lam/2 (regular expansion, leading digit 0)."""
    h = ctx.h
    if ctx.even:
        return (1,) * h
    return (1,) * h + (2,) + (1,) * h


def r_period_word(ctx: HeckeContext) -> tuple[int, ...]:
    """Period word of the purely periodic expansion of r = R - lam."""
    h = ctx.h
    if ctx.q == 3:
        return (3,)
    if ctx.even:
        return (1,) * (h - 1) + (2,)
    return (1,) * h + (2,) + (1,) * (h - 1) + (2,)


def phi_words(ctx: HeckeContext) -> list[tuple[int, ...]]:
    """Digit words of the orbit of -lam/2, listed in increasing order."""
    h = ctx.h
    if ctx.even:
        return [(1,) * (h - i) for i in range(h + 1)]
    words: list[tuple[int, ...]] = []
    for i in range(h + 1):
        words.append((1,) * (h - i) + (2,) + (1,) * h)
        words.append((1,) * (h - i))
    return words


def phi_orbit(ctx: HeckeContext) -> tuple[float, ...]:
    vals = [float(word_matrix(ctx, 0, w)(0.0)) for w in phi_words(ctx)]
    vals[0] = -ctx.lam / 2
    vals[-1] = 0.0
    return tuple(vals)


def minus_R_word(ctx: HeckeContext) -> MoebiusWord:
    """Group element A with A(R) = -R: S for even q, (TS)^(h+1) for odd q."""
    if ctx.even:
        return MoebiusWord(S_MAT.copy(), ("S",))
    ts = T_mat(ctx) @ S_MAT
    return MoebiusWord(np.linalg.matrix_power(ts, ctx.h + 1), ("TS",) * (ctx.h + 1))
