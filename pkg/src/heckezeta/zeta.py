"""Zeta functions from Fredholm determinants, zero scans, eigenfunctions at
eigenvalue 1 and the finite-term functional equations they satisfy."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .hecke_core import HeckeContext
from .operator import (
    FULL,
    REDUCED,
    OperatorSpec,
    _branch_terms,
    assemble,
    closed_form_K_det,
    fredholm_det,
    tail_block,
)
from .partition import DiscSystem, search_discs
from .specfun import squared_power

FULL_ROUTE = "full"
REDUCED_ROUTE = "reduced"


class NotAnEigenvalueError(ArithmeticError):
    """``1`` is not (numerically) an eigenvalue of the reduced operator."""


class ContainmentError(ValueError):
    """A transformed point left the domain where the function is known."""


_DISC_CACHE: dict = {}


def _discs(ctx: HeckeContext, discs: Optional[DiscSystem]) -> DiscSystem:
    if discs is not None:
        return discs
    if ctx.q not in _DISC_CACHE:
        _DISC_CACHE[ctx.q] = search_discs(ctx)
    return _DISC_CACHE[ctx.q]


# ------------------------------------------------------------------ zetas

@dataclass(frozen=True)
class ZetaEval:
    s: complex
    value: complex
    N: int
    convergence_gap: float
    route: str = FULL_ROUTE


def det_L(ctx: HeckeContext, s: complex, N: int, discs=None, route: str = FULL_ROUTE) -> complex:
    """``det(1 - L_s)`` either directly or as the product over both parities."""
    d = _discs(ctx, discs)
    if route == FULL_ROUTE:
        return fredholm_det(assemble(ctx, d, OperatorSpec(FULL), s, N))
    if route == REDUCED_ROUTE:
        out = 1.0 + 0j
        for eps in (1, -1):
            out *= fredholm_det(assemble(ctx, d, OperatorSpec(REDUCED, epsilon=eps), s, N))
        return out
    raise ValueError(f"unknown route {route!r}")


def selberg_zeta(ctx: HeckeContext, s: complex, N: int = 40, discs=None, route: str = FULL_ROUTE) -> ZetaEval:
    s = complex(s)
    k = closed_form_K_det(ctx, s).value
    val = det_L(ctx, s, N, discs, route) / k
    gap = abs(val - det_L(ctx, s, max(N - 10, 4), discs, route) / k)
    return ZetaEval(s, val, N, gap, route)


def ruelle_zeta(ctx: HeckeContext, s: complex, N: int = 40, discs=None) -> ZetaEval:
    """``det(1 - L_{s+1}) / det(1 - L_s)``."""
    s = complex(s)

    def at(n):
        return det_L(ctx, s + 1, n, discs) / det_L(ctx, s, n, discs)

    val = at(N)
    return ZetaEval(s, val, N, abs(val - at(max(N - 10, 4))))


# ------------------------------------------------------------- zero scans

@dataclass(frozen=True)
class ZeroCandidate:
    s: complex
    abs_value: float
    convergence_gap: float
    refined: bool


def parse_path(start: float, stop: float, step: float, axis: str, fixed: float = 0.5) -> list[complex]:
    """Grid points along a real segment (``axis='re'``, at ``Im s = fixed``)
    or a vertical line (``axis='im'``, at ``Re s = fixed``)."""
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if stop <= start:
        return []
    ts = start + step * np.arange(count)
    if axis == "re":
        return [complex(t, fixed) for t in ts]
    if axis == "im":
        return [complex(fixed, t) for t in ts]
    raise ValueError("axis must be 're' or 'im'")


def _golden_min(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def scan_zeros(
    ctx: HeckeContext,
    path: Sequence[complex],
    N: int = 40,
    refine_tol: float = 1e-6,
    discs=None,
    epsilon: Optional[int] = None,
) -> list[ZeroCandidate]:
    """Local minima of ``|det(1 - L_s)|`` along a straight grid, refined by
    golden section and confirmed at ``N + 10``.

    ``epsilon`` restricts the search to one parity class.
    """
    pts = [complex(p) for p in path]
    if len(pts) < 3:
        return []
    d = _discs(ctx, discs)

    def detabs(s: complex, n: int) -> float:
        if epsilon is None:
            return abs(det_L(ctx, s, n, d))
        return abs(fredholm_det(assemble(ctx, d, OperatorSpec(REDUCED, epsilon=epsilon), s, n)))

    vals = [detabs(s, N) for s in pts]
    direction = pts[1] - pts[0]
    out = []
    for k in range(1, len(pts) - 1):
        if not (vals[k] < vals[k - 1] and vals[k] <= vals[k + 1]):
            continue
        at = {}
        for n in (N, N + 10):
            t = _golden_min(lambda u: detabs(pts[k] + u * direction, n), -1.0, 1.0, refine_tol / abs(direction))
            at[n] = pts[k] + t * direction
        s0 = at[N]
        z = det_L(ctx, s0, N, d) / closed_form_K_det(ctx, s0).value
        drift = abs(at[N + 10] - s0)
        out.append(ZeroCandidate(s0, abs(z), drift, drift < refine_tol))
    return sorted(out, key=lambda c: (c.s.real, c.s.imag))


# ---------------------------------------------------------- eigenfunction

_TAYLOR_SHRINK = 0.9


@dataclass
class EigenFunction:
    """Eigenvector of the reduced operator at eigenvalue 1, read as functions
    ``g_1 .. g_kappa`` on the discs.

    Inside ``0.9`` of a disc radius the Taylor polynomial is used; elsewhere
    the value is produced by one application of the operator (valid because
    ``g = L g``), recursing on single branches up to ``depth`` times.
    """

    s: complex
    epsilon: int
    coefficients: dict
    residual: float
    N: int
    ctx: HeckeContext = field(repr=False)
    discs: DiscSystem = field(repr=False)

    def inside(self, comp: int, z: complex) -> bool:
        return abs(z - self.discs.center(comp)) < _TAYLOR_SHRINK * self.discs.radius(comp)

    def taylor(self, comp: int, z: complex) -> complex:
        if not self.inside(comp, z):
            raise ContainmentError(f"{z} is outside disc {comp}")
        u = (z - self.discs.center(comp)) / self.discs.radius(comp)
        return complex(np.polynomial.polynomial.polyval(u, self.coefficients[comp]))

    def __call__(self, z: complex, comp: int = 1, depth: int = 3) -> complex:
        if self.inside(comp, z):
            return self.taylor(comp, z)
        if depth <= 0:
            raise ContainmentError(f"{z} not reachable for component {comp}")
        return self._through_operator(complex(z), comp, depth)

    def _through_operator(self, z: complex, comp: int, depth: int) -> complex:
        lam = self.ctx.lam
        total = 0j
        for i, j, n, tail in _terms(self.ctx):
            if i != comp:
                continue
            reflect = j < 0
            src = abs(j)
            fac = self.epsilon if reflect else 1
            if not tail:
                total += fac * self._single(z, n, src, reflect, depth)
                continue
            sgn = 1 if n > 0 else -1
            m = n
            # explicit terms until the rest of the tail lands in the Taylor disc
            while True:
                w = z + m * lam
                img = (1 / w) if reflect else (-1 / w)
                if sgn * (w / lam).real > 0 and self.inside(src, img) and self.inside(src, 0.0):
                    break
                total += fac * self._single(z, m, src, reflect, depth)
                m += sgn
                if abs(m - n) > 200:
                    raise ContainmentError(f"tail from {n} does not settle at {z}")
            blk = tail_block(lam, m, self.s, z.real, 0.0, self.discs.center(src), self.discs.radius(src), self.N, reflect)
            total += fac * complex(blk[0] @ self.coefficients[src])
        return total

    def _single(self, z: complex, n: int, src: int, reflect: bool, depth: int) -> complex:
        w = z + n * self.ctx.lam
        if w == 0:
            raise ContainmentError("pole of a branch")
        img = (1 / w) if reflect else (-1 / w)
        return squared_power(w, -self.s) * self(img, src, depth - 1)

    def to_json(self) -> dict:
        return {
            "s": {"re": self.s.real, "im": self.s.imag},
            "epsilon": self.epsilon,
            "N": self.N,
            "residual": self.residual,
            "coefficients": {
                str(k): [{"re": float(c.real), "im": float(c.imag)} for c in v] for k, v in sorted(self.coefficients.items())
            },
        }


_TERMS: dict = {}


def _terms(ctx: HeckeContext):
    if ctx.q not in _TERMS:
        _TERMS[ctx.q] = [t for t in _branch_terms(ctx, 0) if t[0] > 0]
    return _TERMS[ctx.q]


def eigenfunction(
    ctx: HeckeContext, s: complex, epsilon: int, N: int = 40, discs=None, kernel_tol: float = 1e-6
) -> EigenFunction:
    s = complex(s)
    d = _discs(ctx, discs)
    M = assemble(ctx, d, OperatorSpec(REDUCED, epsilon=epsilon), s, N)
    A = M.data - np.eye(M.size)
    _, sv, vh = np.linalg.svd(A)
    v = vh[-1].conj()
    resid = float(np.linalg.norm(A @ v) / np.linalg.norm(v))
    if sv[-1] > kernel_tol:
        raise NotAnEigenvalueError(f"smallest singular value of M - I is {sv[-1]:.3e} at s = {s}")
    v = v / v[np.argmax(np.abs(v))]
    dim = N + 1
    coeffs = {c: v[k * dim : (k + 1) * dim].copy() for k, c in enumerate(M.components)}
    return EigenFunction(s, epsilon, coeffs, resid, N, ctx, d)


def with_coefficients(ef: EigenFunction, vector: np.ndarray) -> EigenFunction:
    """Same disc layout, arbitrary coefficients (for negative controls)."""
    dim = ef.N + 1
    comps = sorted(ef.coefficients)
    coeffs = {c: np.asarray(vector[k * dim : (k + 1) * dim], dtype=complex) for k, c in enumerate(comps)}
    return EigenFunction(ef.s, ef.epsilon, coeffs, float("nan"), ef.N, ef.ctx, ef.discs)


# ---------------------------------------------------------- group ring

def _is_unimodular(m: np.ndarray) -> bool:
    return abs(abs(np.linalg.det(m)) - 1) < 1e-9


@dataclass(frozen=True)
class GroupRingWord:
    """Finite formal sum of ``(coefficient, 2x2 matrix)`` terms acting by
    ``g|gamma(z) = ((cz + d)^2)^(-s) g(gamma z)``."""

    terms: tuple

    def __post_init__(self):
        for _, m in self.terms:
            if not _is_unimodular(np.asarray(m)):
                raise ValueError("group ring elements must have |det| = 1")

    @classmethod
    def element(cls, m, coef: complex = 1.0) -> "GroupRingWord":
        return cls(((complex(coef), np.asarray(m, dtype=float)),))

    def __add__(self, other: "GroupRingWord") -> "GroupRingWord":
        return GroupRingWord(self.terms + other.terms)

    def __sub__(self, other: "GroupRingWord") -> "GroupRingWord":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "GroupRingWord":
        return GroupRingWord(tuple((c * a, m) for a, m in self.terms))

    def __mul__(self, other: "GroupRingWord") -> "GroupRingWord":
        return GroupRingWord(tuple((a * b, m @ n) for a, m in self.terms for b, n in other.terms))

    def __pow__(self, k: int) -> "GroupRingWord":
        out = identity()
        for _ in range(k):
            out = out * self
        return out


def identity() -> GroupRingWord:
    return GroupRingWord.element(np.eye(2))


def T(ctx: HeckeContext, a: int = 1) -> GroupRingWord:
    return GroupRingWord.element([[1.0, a * ctx.lam], [0.0, 1.0]])


def S() -> GroupRingWord:
    return GroupRingWord.element([[0.0, -1.0], [1.0, 0.0]])


def S_tilde() -> GroupRingWord:
    """``z -> 1/z``."""
    return GroupRingWord.element([[0.0, 1.0], [1.0, 0.0]])


def P_sum(g: GroupRingWord, k: int) -> GroupRingWord:
    """``1 + g + ... + g^k``; zero for ``k < 0``."""
    if k < 0:
        return GroupRingWord(())
    out, p = identity(), identity()
    for _ in range(k):
        p = p * g
        out = out + p
    return out


def slash_apply(g: Callable, word: GroupRingWord, s: complex, z: complex) -> complex:
    s = complex(s)
    total = 0j
    bad = []
    for coef, m in word.terms:
        (a, b), (c, d) = m
        j = c * z + d
        if j == 0:
            bad.append(m.tolist())
            continue
        try:
            total += coef * squared_power(j, -s) * g((a * z + b) / j)
        except ContainmentError:
            bad.append(m.tolist())
    if bad:
        raise ContainmentError(f"transformed points leave the domain for {bad}")
    return total


def functional_equation(ctx: HeckeContext, eps: int) -> tuple[GroupRingWord, GroupRingWord]:
    """``(lhs, rhs)`` with ``g|lhs = g|rhs`` for eigenfunctions of parity ``eps``."""
    h = ctx.h
    ST = S() * T(ctx)
    lhs = identity() - T(ctx)
    if ctx.q == 3:
        return lhs, S() * T(ctx, 3) - (S_tilde() * T(ctx, -1)).scale(eps)
    P = P_sum(ST, h - 1)
    if ctx.even:
        return lhs, P * (S() * T(ctx, 2) - S_tilde().scale(eps))
    X = (ST ** (h + 1)) * T(ctx) * P
    pos = P * S() * T(ctx, 2) + X * S() * T(ctx, 2) + (ST ** h) * S() * T(ctx, 3)
    neg = P * S_tilde() + X * S_tilde() + (ST ** h) * S_tilde() * T(ctx, -1)
    return lhs, pos - neg.scale(eps)


def component_relations(ctx: HeckeContext) -> list[tuple[int, list]]:
    """``(i, [(k, word), ...])`` meaning ``g_i = sum_k g_k | word``."""
    ST = S() * T(ctx)
    h = ctx.h
    out = []
    if ctx.even:
        for i in range(2, h + 1):
            out.append((i, [(1, P_sum(ST, i - 1))]))
    elif ctx.q > 3:
        out.append((2, [(1, identity() + (ST ** (h + 1)) * T(ctx))]))
        for i in range(1, h + 1):
            if i > 1:
                out.append((2 * i, [(2, P_sum(ST, i - 1))]))
            out.append((2 * i + 1, [(1, ST ** i), (2, P_sum(ST, i - 1))]))
    return out


def _admissible(ctx: HeckeContext, ef: EigenFunction, eps: int, pts) -> list[float]:
    lhs, rhs = functional_equation(ctx, eps)
    out = []
    for z in pts:
        try:
            slash_apply(ef, lhs, ef.s, z)
            slash_apply(ef, rhs, ef.s, z)
            if ctx.q == 3:
                ef(-z - 1)
        except (ContainmentError, ValueError):
            continue
        out.append(float(z))
    return out


def default_samples(ctx: HeckeContext, ef: EigenFunction, eps: int, count: int = 40, min_samples: int = 10) -> list[float]:
    """Equispaced points of the real diameter of ``D_1`` inside the fundamental
    interval for which every term of the equation can be evaluated.  The grid
    is refined tenfold when fewer than ``min_samples`` survive."""
    a, b = ef.discs.intervals[1]
    lo, hi = max(a, -ctx.lam / 2), min(b, ctx.lam / 2)
    for n in (count, 10 * count):
        pts = lo + (hi - lo) * (np.arange(n) + 0.5) / n
        out = _admissible(ctx, ef, eps, pts)
        if len(out) >= min_samples:
            break
    return out


def functional_residual(
    ctx: HeckeContext, s: complex, epsilon: int, ef: EigenFunction, samples: Optional[Sequence[float]] = None, min_samples: int = 10
) -> float:
    """Largest ``|g|lhs - g|rhs|`` over the samples, together with the
    reflection identity (q = 3) and the relations between components."""
    s = complex(s)
    if samples is None:
        samples = default_samples(ctx, ef, epsilon)
    if len(samples) < min_samples:
        raise ContainmentError(f"only {len(samples)} admissible sample points")
    lhs, rhs = functional_equation(ctx, epsilon)
    g1 = lambda z: ef(z, 1)
    worst = 0.0
    for z in samples:
        worst = max(worst, abs(slash_apply(g1, lhs, s, z) - slash_apply(g1, rhs, s, z)))
        if ctx.q == 3:
            worst = max(worst, abs(ef(z) - epsilon * ef(-z - 1)))
    for i, parts in component_relations(ctx):
        for z in samples:
            try:
                gi = ef(z, i)
                rhs_i = sum(slash_apply(lambda y, k=k: ef(y, k), word, s, z) for k, word in parts)
            except ContainmentError:
                continue
            worst = max(worst, abs(gi - rhs_i))
    return worst
