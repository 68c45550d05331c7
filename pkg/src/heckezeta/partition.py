"""Markov partition, admissible branch indices, and the disc system.

Cells are labelled by the nonzero integers ``+-1 .. +-kappa``; positive labels
sit on the negative half of the fundamental interval.  Local inverses are
``theta_n(x) = -1/(x + n*lam)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .hecke_core import CFExpansion, DomainError, HeckeContext, evaluate, phi_orbit, step


def local_inverse(ctx: HeckeContext, n: int, x):
    return -1.0 / (x + n * ctx.lam)


def local_inverse_derivative(ctx: HeckeContext, n: int, x):
    return 1.0 / (x + n * ctx.lam) ** 2


def cell_labels(ctx: HeckeContext) -> list[int]:
    """Component order used everywhere: 1..kappa then -1..-kappa."""
    k = ctx.kappa
    return list(range(1, k + 1)) + [-i for i in range(1, k + 1)]


@dataclass(frozen=True)
class MarkovPartition:
    intervals: dict
    phi_points: tuple

    def cell_of(self, x: float) -> int:
        """Label of the cell whose interior contains ``x``."""
        for i, (a, b) in self.intervals.items():
            if a < x < b:
                return i
        raise DomainError(f"{x!r} is not interior to any cell")


def build_markov(ctx: HeckeContext) -> MarkovPartition:
    phi = phi_orbit(ctx)
    cells = {}
    for i in range(1, ctx.kappa + 1):
        cells[i] = (phi[i - 1], phi[i])
    for i in range(1, ctx.kappa + 1):
        cells[-i] = (-phi[i], -phi[i - 1])
    return MarkovPartition(cells, phi)


@dataclass(frozen=True)
class MarkovCheck:
    cover_gap: float
    overlap: float
    boundary_drift: float

    def ok(self, tol: float = 1e-9) -> bool:
        return self.cover_gap <= tol and self.overlap <= tol and self.boundary_drift <= tol


def check_markov(ctx: HeckeContext, mp: Optional[MarkovPartition] = None) -> MarkovCheck:
    """Cells tile ``[-lam/2, lam/2]`` and ``f`` maps partition points to
    partition points."""
    mp = mp or build_markov(ctx)
    ivs = sorted(mp.intervals.values())
    half = ctx.lam / 2
    gap = max(abs(ivs[0][0] + half), abs(ivs[-1][1] - half))
    overlap = 0.0
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        gap = max(gap, a1 - b0)
        overlap = max(overlap, b0 - a1)
    ends = sorted({x for iv in ivs for x in iv})
    drift = 0.0
    for x in ends:
        _, y = step(ctx, x)
        drift = max(drift, min(abs(y - e) for e in ends))
    return MarkovCheck(max(gap, 0.0), max(overlap, 0.0), drift)


# ------------------------------------------------------------ refined partition

@dataclass(frozen=True)
class RefinedCell:
    label: str
    digit: int
    left: float
    right: float


def _label(digit: int, sub: Optional[int]) -> str:
    return str(digit) if sub is None else f"{digit}_{sub}"


def tail_bound(ctx: HeckeContext) -> int:
    """Smallest |digit| from which monotonicity cells are not split further."""
    return 2 if ctx.even else 3


def _monotone_interval(ctx: HeckeContext, m: int) -> tuple[float, float]:
    lam = ctx.lam
    if ctx.q == 3 and m == 2:
        left, right = -0.5, -0.4
    elif m == 1:
        left, right = -lam / 2, -2.0 / (3 * lam)
    else:
        left, right = -2.0 / ((2 * m - 1) * lam), -2.0 / ((2 * m + 1) * lam)
    return left, right


def build_refined(ctx: HeckeContext, m_max: int = 12) -> list[RefinedCell]:
    """Monotonicity cells intersected with the Markov cells, listed left to right
    for the negative half and mirrored; digits run up to ``m_max``."""
    mp = build_markov(ctx)
    neg: list[RefinedCell] = []
    m0 = 2 if ctx.q == 3 else 1
    bound = 2 if ctx.q == 3 else tail_bound(ctx)
    for m in range(m0, m_max + 1):
        a, b = _monotone_interval(ctx, m)
        if m >= bound:
            neg.append(RefinedCell(_label(m, None), m, a, b))
            continue
        for i in range(1, ctx.kappa + 1):
            u, v = mp.intervals[i]
            lo, hi = max(a, u), min(b, v)
            if hi > lo:
                neg.append(RefinedCell(_label(m, i), m, lo, hi))
    pos = [RefinedCell("-" + c.label, -c.digit, -c.right, -c.left) for c in neg]
    return neg + pos


def _parse(label: str) -> tuple[int, Optional[int]]:
    try:
        if "_" in label:
            d, s = label.split("_")
            return int(d), int(s)
        return int(label), None
    except ValueError:
        raise DomainError(f"unknown label {label!r}") from None


def refined_labels(ctx: HeckeContext, m_max: int = 12) -> list[str]:
    return [c.label for c in build_refined(ctx, m_max)]


def _find_cell(ctx: HeckeContext, label: str) -> RefinedCell:
    d, _ = _parse(label)
    for c in build_refined(ctx, max(abs(d), tail_bound(ctx)) + 1):
        if c.label == label:
            return c
    raise DomainError(f"label {label!r} is not in the refined partition for q={ctx.q}")


def transition(ctx: HeckeContext, i: str, j: str) -> bool:
    """Whether cell ``j`` is covered by the image of cell ``i``.

    Computed from the exact branch ``x -> -1/x - d*lam`` on the endpoints of
    cell ``i``; the Markov property makes the image a union of cells.
    """
    ci, cj = _find_cell(ctx, i), _find_cell(ctx, j)
    lo = -1.0 / ci.left - ci.digit * ctx.lam
    hi = -1.0 / ci.right - ci.digit * ctx.lam
    tol = 1e-9
    if cj.left >= lo - tol and cj.right <= hi + tol:
        return True
    if cj.right <= lo + tol or cj.left >= hi - tol:
        return False
    raise ArithmeticError(f"cell {j} straddles the image of {i}")


# ------------------------------------------------------------------ index sets

@dataclass(frozen=True)
class IndexSet:
    """Finite set of branch indices plus optional tails ``n >= lo`` / ``n <= hi``."""

    finite: frozenset = frozenset()
    at_least: Optional[int] = None
    at_most: Optional[int] = None

    def __contains__(self, n: int) -> bool:
        if n in self.finite:
            return True
        if self.at_least is not None and n >= self.at_least:
            return True
        return self.at_most is not None and n <= self.at_most

    def __bool__(self) -> bool:
        return bool(self.finite) or self.at_least is not None or self.at_most is not None

    def negate(self) -> "IndexSet":
        return IndexSet(
            frozenset(-n for n in self.finite),
            None if self.at_most is None else -self.at_most,
            None if self.at_least is None else -self.at_least,
        )

    def sample(self, depth: int) -> list[int]:
        """Finite members plus the first ``depth`` members of each tail."""
        out = sorted(self.finite)
        if self.at_least is not None:
            out += list(range(self.at_least, self.at_least + depth))
        if self.at_most is not None:
            out += list(range(self.at_most, self.at_most - depth, -1))
        return out

    def __str__(self) -> str:
        parts = [str(n) for n in sorted(self.finite)]
        if self.at_least is not None:
            parts.append(f">={self.at_least}")
        if self.at_most is not None:
            parts.append(f"<={self.at_most}")
        return "{" + ", ".join(parts) + "}"


def index_sets(ctx: HeckeContext) -> dict:
    """Branch indices ``n`` with ``theta_n`` mapping cell ``i`` into cell ``j``.

    Keys are ``(i, j)``; pairs not present are empty.  Rows for negative ``i``
    follow from the reflection ``N[-i, j] = -N[i, -j]``.
    """
    q, h, k = ctx.q, ctx.h, ctx.kappa
    pos: dict = {}
    if q == 3:
        pos[(1, 1)] = IndexSet(at_least=3)
        pos[(1, -1)] = IndexSet(at_most=-2)
    elif ctx.even:
        for i in range(1, h + 1):
            pos[(i, h)] = IndexSet(at_least=2)
            pos[(i, -h)] = IndexSet(at_most=-1)
            if i >= 2:
                pos[(i, i - 1)] = IndexSet(frozenset({1}))
    else:
        top = 2 * h + 1
        pos[(1, 2 * h)] = IndexSet(frozenset({2}))
        pos[(1, -2 * h)] = IndexSet(frozenset({-1}))
        pos[(1, top)] = IndexSet(at_least=3)
        pos[(1, -top)] = IndexSet(at_most=-2)
        for i in range(2, k + 1):
            pos[(i, -2 * h)] = IndexSet(frozenset({-1}))
            pos[(i, top)] = IndexSet(at_least=2)
            pos[(i, -top)] = IndexSet(at_most=-2)
            if i >= 3:
                pos[(i, i - 2)] = IndexSet(frozenset({1}))
    out = dict(pos)
    for (i, j), s in pos.items():
        out[(-i, -j)] = s.negate()
    return out


def index_sets_numeric(ctx: HeckeContext, n_max: int = 40) -> dict:
    """Brute-force the index sets from the cell endpoints, ``|n| <= n_max``.

    Returned as plain sets of integers; used to cross-check :func:`index_sets`.
    """
    mp = build_markov(ctx)
    eps = 1e-12
    found: dict = {}
    for i, (a, b) in mp.intervals.items():
        for n in range(-n_max, n_max + 1):
            if n == 0:
                continue
            ya, yb = local_inverse(ctx, n, a + eps), local_inverse(ctx, n, b - eps)
            for j, (u, v) in mp.intervals.items():
                if u - eps <= min(ya, yb) and max(ya, yb) <= v + eps:
                    found.setdefault((i, j), set()).add(n)
    return found


# ----------------------------------------------------------------------- discs

class DiscVerificationError(RuntimeError):
    def __init__(self, message: str, report: "DiscReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class DiscSystem:
    intervals: dict
    enlargement: dict = field(default_factory=dict)

    def center(self, i: int) -> float:
        a, b = self.intervals[i]
        return 0.5 * (a + b)

    def radius(self, i: int) -> float:
        a, b = self.intervals[i]
        return 0.5 * (b - a)


def _left_word(ctx: HeckeContext, i: int) -> list[int]:
    """Digits after the leading -1 of the left endpoint of the unenlarged I_i."""
    h = ctx.h
    if ctx.even:
        return [-1] * i
    if i % 2 == 1:
        return [-1] * ((i - 1) // 2) + [-2] + [-1] * h
    return [-1] * (i // 2)


def build_discs(ctx: HeckeContext, base_enlargement: Optional[int] = 5) -> DiscSystem:
    """Real diametral intervals of the discs.  ``base_enlargement=None`` gives the
    unenlarged intervals (which fail containment for odd q >= 5)."""
    lam = ctx.lam
    if ctx.q == 3:
        return DiscSystem({1: (-1.0, 0.5), -1: (-0.5, 1.0)})
    if ctx.q == 4:
        return DiscSystem({1: (-1.0, lam / 4), -1: (-lam / 4, 1.0)})
    if base_enlargement is not None and base_enlargement < 2:
        raise DomainError("base_enlargement must be >= 2")
    intervals, enl = {}, {}
    for i in range(1, ctx.kappa + 1):
        word = _left_word(ctx, i)
        if base_enlargement is not None:
            enl[i] = base_enlargement + i
            word = word + [enl[i]]
        left = evaluate(ctx, CFExpansion(-1, tuple(word)))
        intervals[i] = (left, lam / 4)
        intervals[-i] = (-lam / 4, -left)
    return DiscSystem(intervals, enl)


@dataclass
class DiscReport:
    rows: list  # (i, j, n, margin); n is an int or a "limit>=L" marker
    ok: bool

    def worst(self):
        return min(self.rows, key=lambda r: r[3]) if self.rows else None


def _image(ctx: HeckeContext, n: int, a: float, b: float) -> tuple[float, float]:
    if a < -n * ctx.lam < b:
        return -math.inf, math.inf
    ya, yb = local_inverse(ctx, n, a), local_inverse(ctx, n, b)
    return min(ya, yb), max(ya, yb)


def verify_discs(
    ctx: HeckeContext, d: DiscSystem, tail_check_depth: int = 20, margin: float = 1e-9, strict: bool = True
) -> DiscReport:
    """Check ``theta_n(closure I_i)`` lies inside ``I_j`` for every admissible ``n``.

    Tails are checked explicitly for ``tail_check_depth`` indices; beyond that
    the images lie between the last checked image endpoint and 0.
    """
    if tail_check_depth < 1:
        raise DomainError("tail_check_depth must be >= 1")
    rows = []
    for (i, j), ns in sorted(index_sets(ctx).items()):
        a, b = d.intervals[i]
        u, v = d.intervals[j]
        for n in ns.sample(tail_check_depth):
            lo, hi = _image(ctx, n, a, b)
            rows.append((i, j, n, min(lo - u, v - hi)))
        if ns.at_least is not None:
            last = ns.at_least + tail_check_depth
            lo, _ = _image(ctx, last, a, b)
            rows.append((i, j, f"limit>={last}", min(lo - u, v - 0.0)))
        if ns.at_most is not None:
            last = ns.at_most - tail_check_depth
            _, hi = _image(ctx, last, a, b)
            rows.append((i, j, f"limit<={last}", min(0.0 - u, v - hi)))
    ok = all(r[3] >= margin for r in rows)
    report = DiscReport(rows, ok)
    if strict and not ok:
        i, j, n, m = report.worst()
        raise DiscVerificationError(f"containment fails for (i, j, n) = ({i}, {j}, {n}), margin {m:.3e}", report)
    return report


def search_discs(ctx: HeckeContext, tail_check_depth: int = 20, start: int = 5, limit: int = 10_000) -> DiscSystem:
    """Double the enlargement base from ``start`` until the discs verify."""
    base = start
    while base <= limit:
        d = build_discs(ctx, base)
        if verify_discs(ctx, d, tail_check_depth, strict=False).ok:
            return d
        base *= 2
    raise DiscVerificationError(f"no valid enlargement up to {limit} for q={ctx.q}", DiscReport([], False))


def iter_branches(ctx: HeckeContext) -> Iterator[tuple[int, int, IndexSet]]:
    for (i, j), ns in sorted(index_sets(ctx).items()):
        yield i, j, ns
