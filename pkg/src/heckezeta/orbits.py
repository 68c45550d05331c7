"""Periodic orbits of the continued-fraction map, enumerated by brute force.

A periodic point with digit cycle ``(a1, ..., an)`` is the attracting fixed
point of ``M = S T^a1 ... S T^an``.  Its multiplier is ``mu^-2`` where ``mu`` is
the larger eigenvalue of ``M`` in modulus, so the orbit length is ``2 ln mu``
and the weight of the orbit in the partition function is ``mu^(-2s)``.

Two conventions coexist and must not be mixed:

* :func:`partition_function` sums over *all* fixed words of ``f^n`` (every
  rotation counted);
* :func:`prime_orbits` and the products keep one word per rotation class.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .hecke_core import (
    DomainError,
    HeckeContext,
    MoebiusWord,
    attracting_fixed_point,
    is_cyclically_regular,
    is_regular,
    r_period_word,
    word_matrix,
)
from .specfun import hurwitz_zeta


@dataclass(frozen=True)
class OrbitWord:
    digits: tuple
    prime: bool

    @classmethod
    def of(cls, digits: Sequence[int]) -> "OrbitWord":
        d = tuple(int(a) for a in digits)
        return cls(d, _is_primitive(d))


@dataclass(frozen=True)
class OrbitRecord:
    word: OrbitWord
    fixed_point: float
    length: float
    moebius: MoebiusWord
    trace: float


def _is_primitive(d: tuple) -> bool:
    n = len(d)
    return not any(n % p == 0 and d == d[:p] * (n // p) for p in range(1, n))


def _canonical(d: tuple) -> tuple:
    return min(d[t:] + d[:t] for t in range(len(d)))


def _mu(trace: float) -> float:
    t = abs(trace)
    return 0.5 * (t + math.sqrt(t * t - 4.0))


def enumerate_periodic(ctx: HeckeContext, n: int, digit_bound: int, prime_only: bool = False) -> list[OrbitWord]:
    """Cyclically regular words of length ``n`` with ``|digit| <= digit_bound``.

    With ``prime_only`` one representative (smallest rotation) per class of
    primitive words is returned.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    alphabet = [a for m in range(1, digit_bound + 1) for a in (m, -m)]
    out = []

    def rec(prefix: list):
        if len(prefix) == n:
            d = tuple(prefix)
            if not is_cyclically_regular(ctx, d):
                return
            if prime_only and (not _is_primitive(d) or _canonical(d) != d):
                return
            out.append(OrbitWord.of(d))
            return
        for a in alphabet:
            prefix.append(a)
            if is_regular(ctx, prefix[-2 * ctx.h - 2 :]):
                rec(prefix)
            prefix.pop()

    rec([])
    return sorted(out, key=lambda w: (len(w.digits), [abs(a) for a in w.digits], w.digits))


def _word(w) -> tuple:
    return w.digits if isinstance(w, OrbitWord) else tuple(w)


def fixed_point(ctx: HeckeContext, w) -> float:
    return attracting_fixed_point(word_matrix(ctx, 0, _word(w)).matrix)


def orbit_points(ctx: HeckeContext, w) -> list[float]:
    d = _word(w)
    return [fixed_point(ctx, d[t:] + d[:t]) for t in range(len(d))]


def orbit_length(ctx: HeckeContext, w) -> float:
    """``-2 sum ln|x_l|`` over the orbit points."""
    return -2.0 * sum(math.log(abs(x)) for x in orbit_points(ctx, w))


def orbit_length_trace(ctx: HeckeContext, w) -> float:
    """``2 ln mu`` from the trace of the word matrix."""
    return 2.0 * math.log(_mu(word_matrix(ctx, 0, _word(w)).trace))


def orbit_record(ctx: HeckeContext, w) -> OrbitRecord:
    d = _word(w)
    m = word_matrix(ctx, 0, d)
    tr = m.trace
    if abs(tr) <= 2:
        raise DomainError(f"word {d} is not hyperbolic")
    return OrbitRecord(OrbitWord.of(d), attracting_fixed_point(m.matrix), 2.0 * math.log(_mu(tr)), m, tr)


def is_O_plus(ctx: HeckeContext, w) -> bool:
    d = _word(w)
    ref = r_period_word(ctx)
    return len(d) == len(ref) and any(d[t:] + d[:t] == ref for t in range(len(d)))


# --------------------------------------------------------- partition function

def digit_weight_bound(ctx: HeckeContext, a, sigma: float):
    """Upper bound of ``|x|^(2 sigma)`` for a point whose next digit is ``a``."""
    a = np.abs(np.asarray(a, dtype=float))
    lam = ctx.lam
    x = np.minimum(lam / 2, 2.0 / ((2 * a - 1) * lam))
    return x ** (2 * sigma)


def _beyond(ctx: HeckeContext, B: int, sigma: float) -> float:
    """Sum of :func:`digit_weight_bound` over ``|a| > B``."""
    if 2 * sigma <= 1:
        return math.inf
    return 2.0 * ctx.lam ** (-2 * sigma) * hurwitz_zeta(2 * sigma, B + 0.5).value.real


@dataclass(frozen=True)
class PartitionSum:
    value: complex
    tail_bound: float
    words: int


def _class_rep(a: int) -> int:
    return a if abs(a) <= 3 else (3 if a > 0 else -3)


def partition_function(
    ctx: HeckeContext, n: int, s: complex, digit_bound: int = 200, prune: float = 1e-14
) -> PartitionSum:
    """``Z_n(s) = sum over fixed words of f^n of mu^(-2s)`` with a tail majorant.

    Words with all ``|digit| <= digit_bound`` are summed; subtrees whose total
    weight is certified below ``prune`` are skipped and their bound is added to
    ``tail_bound`` together with the contribution of larger digits.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    s = complex(s)
    sigma = s.real
    B = digit_bound
    lam = ctx.lam
    mags = np.arange(1, B + 1)
    wb = digit_weight_bound(ctx, mags, sigma)
    # sum of bounds over digits with |a| >= m (both signs), index m-1
    suffix = 2 * np.cumsum(wb[::-1])[::-1]
    W = float(suffix[0])
    w_inf = W + _beyond(ctx, B, sigma)
    tail = n * _beyond(ctx, B, sigma) * w_inf ** (n - 1)
    total = 0j
    count = 0
    pos = np.arange(1, B + 1, dtype=float)
    digits_all = np.concatenate([pos, -pos])
    # regularity only sees whether a digit is 1, 2 or larger (and its sign)
    reps = (1, 2, 3, -1, -2, -3)
    cls = np.minimum(np.abs(digits_all), 3).astype(int) - 1 + np.where(digits_all < 0, 3, 0)
    mask_cache: dict = {}
    prefix_cache: dict = {}
    batch_P: list = []
    batch_mask: list = []

    def flush():
        nonlocal total, count
        if not batch_P:
            return
        P = np.array(batch_P)
        ok = np.array(batch_mask)[:, cls]
        tr = (P[:, 0, 1] - P[:, 1, 0])[:, None] + (lam * P[:, 1, 1])[:, None] * digits_all[None, :]
        t = np.abs(tr[ok])
        if t.size and t.min() <= 2:
            raise ArithmeticError("non-hyperbolic admissible word")
        mu = 0.5 * (t + np.sqrt(t * t - 4.0))
        if s.imag == 0:
            total += np.sum(mu ** (-2 * s.real))
        else:
            total += np.sum(np.exp(-2 * s * np.log(mu)))
        count += t.size
        batch_P.clear()
        batch_mask.clear()

    def leaf(key: tuple, P: np.ndarray):
        mask = mask_cache.get(key)
        if mask is None:
            mask = np.array([is_cyclically_regular(ctx, key + (r,)) for r in reps])
            mask_cache[key] = mask
        batch_P.append(P)
        batch_mask.append(mask)
        if len(batch_P) >= 4096:
            flush()

    def prefix_ok(key: tuple) -> bool:
        v = prefix_cache.get(key)
        if v is None:
            v = prefix_cache[key] = is_regular(ctx, key[-2 * ctx.h - 2 :])
        return v

    def rec(key: tuple, P: np.ndarray, bound: float):
        nonlocal tail
        depth = len(key)
        if depth == n - 1:
            leaf(key, P)
            return
        rest = W ** (n - depth - 1)
        for m in range(1, B + 1):
            if bound * wb[m - 1] * rest < prune:
                tail += bound * rest * float(suffix[m - 1])
                break
            r = min(m, 3)
            for a in (m, -m):
                k2 = key + ((r if a > 0 else -r),)
                if prefix_ok(k2):
                    Q = P @ np.array([[0.0, -1.0], [1.0, a * lam]])
                    rec(k2, Q, bound * wb[m - 1])

    rec((), np.eye(2), 1.0)
    flush()
    return PartitionSum(complex(total), float(tail), count)


# ------------------------------------------------------------- prime orbits

def prime_orbits(ctx: HeckeContext, max_length: float, digit_bound: int = 10_000, max_period: int = 64) -> list[OrbitRecord]:
    """All prime orbits with ``length <= max_length``.

    Depth-first over regular prefixes.  A prefix matrix with bottom row
    ``(c, d)`` forces ``ln mu >= min ln|c x + d|`` over the fundamental
    interval, which prunes the search.
    """
    lam = ctx.lam
    half = max_length / 2.0
    ends = (-lam / 2, lam / 2)
    found: dict = {}

    def lower(P: np.ndarray) -> float:
        c, d = P[1]
        v = [c * x + d for x in ends]
        if v[0] * v[1] <= 0:
            return 0.0
        return math.log(min(abs(v[0]), abs(v[1])))

    def rec(prefix: list, P: np.ndarray):
        if prefix:
            d = tuple(prefix)
            if _is_primitive(d) and _canonical(d) == d and is_cyclically_regular(ctx, d):
                tr = P[0, 0] + P[1, 1]
                if abs(tr) > 2 and math.log(_mu(tr)) <= half:
                    found[d] = True
        if len(prefix) >= max_period:
            return
        for m in range(1, digit_bound + 1):
            grew = False
            for a in (m, -m):
                Q = P @ np.array([[0.0, -1.0], [1.0, a * lam]])
                if lower(Q) > half:
                    continue
                grew = True
                prefix.append(a)
                if is_regular(ctx, prefix[-2 * ctx.h - 2 :]):
                    rec(prefix, Q)
                prefix.pop()
            if not grew and m >= 3:
                break

    rec([], np.eye(2))
    recs = [orbit_record(ctx, d) for d in found]
    return sorted(recs, key=lambda r: (r.length, r.word.digits))


def _orbit_list(ctx, orbits, max_length, digit_bound):
    if orbits is None:
        orbits = prime_orbits(ctx, max_length, digit_bound)
    return [o for o in orbits if o.length <= max_length]


def selberg_product(
    ctx: HeckeContext,
    s: complex,
    max_length: float = 12.0,
    k_max: int = 30,
    digit_bound: int = 10_000,
    orbits: Optional[Iterable[OrbitRecord]] = None,
    remove_O_plus: bool = True,
) -> complex:
    """Direct product over prime map orbits, with the doubly counted orbit of
    ``r`` divided out once."""
    s = complex(s)
    orbs = _orbit_list(ctx, orbits, max_length, digit_bound)
    ks = np.arange(k_max + 1)
    log_val = 0j
    for o in orbs:
        log_val += np.sum(np.log(1 - np.exp(-(s + ks) * o.length)))
    if remove_O_plus:
        r_plus = orbit_length(ctx, r_period_word(ctx))
        log_val -= np.sum(np.log(1 - np.exp(-(s + ks) * r_plus)))
    return complex(cmath.exp(log_val))


def ruelle_product(
    ctx: HeckeContext, s: complex, max_length: float = 12.0, digit_bound: int = 10_000, orbits=None
) -> complex:
    s = complex(s)
    orbs = _orbit_list(ctx, orbits, max_length, digit_bound)
    log_val = -sum(cmath.log(1 - cmath.exp(-s * o.length)) for o in orbs)
    return complex(cmath.exp(log_val))
