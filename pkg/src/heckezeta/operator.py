"""
Finite-rank matrices of the transfer operators on the disc system.

Every component ``j`` carries the scaled monomial basis
``e_k(z) = ((z - c_j) / rho_j)**k``, ``k = 0..N``.  An operator block from
source ``j`` to target ``i`` is the matrix of Taylor coefficients (in the
scaled variable of ``i``) of ``weight(z) * e_k(image(z))``.

Single branches ``z -> -1/(z + n lam)`` are expanded by truncated power-series
composition.  Infinite branch sums ``sum_{l >= n}`` go through the Hurwitz zeta
function, which also supplies the continuation in ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hecke_core import HeckeContext, r_period_word, step
from .partition import DiscSystem, build_markov, cell_labels, index_sets
from .specfun import PoleError, hurwitz_zeta

FULL = "full"
REDUCED = "reduced"
K_OP = "K"
ELEMENTARY = "elementary"

_POLE_GUARD = 1e-6


@dataclass(frozen=True)
class OperatorSpec:
    """What to assemble.

    ``kind`` is one of ``full``, ``reduced`` (with ``epsilon``), ``K`` or
    ``elementary``.  An elementary operator is a single branch ``n`` (or the
    tail ``l >= n`` / ``l <= n`` when ``tail`` is set) from ``source`` to
    ``target``.
    """

    kind: str = FULL
    epsilon: int = 1
    n: int = 0
    tail: bool = False
    source: int = 1
    target: int = 1


@dataclass
class BlockMatrix:
    components: tuple
    N: int
    data: np.ndarray
    s: complex
    kind: str
    centers: tuple = ()
    radii: tuple = ()

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def block(self, i, j) -> np.ndarray:
        a = self.components.index(i) * (self.N + 1)
        b = self.components.index(j) * (self.N + 1)
        return self.data[a : a + self.N + 1, b : b + self.N + 1]

    def to_json(self) -> dict:
        flat = self.data.reshape(-1)
        return {
            "components": list(self.components),
            "N": self.N,
            "kind": self.kind,
            "s": {"re": float(np.real(self.s)), "im": float(np.imag(self.s))},
            "shape": list(self.data.shape),
            "entries": [[float(v.real), float(v.imag)] for v in flat],
        }


# ------------------------------------------------------------------ series

def _lower_toeplitz(c: np.ndarray) -> np.ndarray:
    n = len(c)
    idx = np.subtract.outer(np.arange(n), np.arange(n))
    return np.where(idx >= 0, c[np.clip(idx, 0, None)], 0)


def _check_pole(s: complex) -> None:
    # (1 - k)/2 for k >= 0
    k = 1 - 2 * s
    kr = round(k.real)
    if kr >= 0 and abs(k - kr) / 2 < _POLE_GUARD:
        raise PoleError(f"s = {s} is within {_POLE_GUARD} of the pole {(1 - kr) / 2}")


def single_branch_block(
    lam: float, n: int, s: complex, ci: float, ri: float, cj: float, rj: float, N: int, reflect: bool = False
) -> np.ndarray:
    """Block of ``g -> (w^2)^(-s) g(-1/w)`` with ``w = z + n lam`` (``g(+1/w)``
    when ``reflect``), source disc ``(cj, rj)``, target disc ``(ci, ri)``."""
    w0 = ci + n * lam
    x = ri / w0
    if abs(x) >= 1:
        raise ValueError(f"branch {n} has its pole inside the target disc")
    p = np.arange(N + 1)
    geo = (-x) ** p
    # image in the source scaled variable
    img = (-1.0 / w0) * geo
    if reflect:
        img = -img
    u = img.astype(complex)
    u[0] -= cj
    u /= rj
    # (1 + x t)^(-2s) by the binomial series
    wt = np.empty(N + 1, dtype=complex)
    wt[0] = 1.0
    for t in range(1, N + 1):
        wt[t] = wt[t - 1] * (-2 * s - t + 1) / t * x
    wt *= np.exp(-s * math.log(w0 * w0))
    U = _lower_toeplitz(u)
    cols = np.empty((N + 1, N + 1), dtype=complex)
    v = np.zeros(N + 1, dtype=complex)
    v[0] = 1.0
    for k in range(N + 1):
        cols[:, k] = v
        v = U @ v
    return _lower_toeplitz(wt) @ cols


def tail_block(
    lam: float, n: int, s: complex, ci: float, ri: float, cj: float, rj: float, N: int, reflect: bool = False
) -> np.ndarray:
    """Block of ``sum_{l >= n}`` (``n > 0``) or ``sum_{l <= n}`` (``n < 0``) of the
    branch operators, via Hurwitz zeta values."""
    _check_pole(s)
    sgn = 1 if n > 0 else -1
    n0 = abs(n)
    a0 = n0 + sgn * ci / lam
    delta = sgn * ri / lam
    if abs(delta) >= a0:
        raise ValueError("tail pole inside the target disc")
    # (image)^mm carries (-1/w)^mm, reflected: (+1/w)^mm; w = sgn * (l lam + sgn z)
    img_sign = (-1 if not reflect else 1) * sgn
    zvals = [hurwitz_zeta(2 * s + t, a0).value for t in range(2 * N + 1)]
    X = np.empty((N + 1, N + 1), dtype=complex)
    for mm in range(N + 1):
        sigma = 2 * s + mm
        base = img_sign ** mm * np.exp(-sigma * math.log(lam))
        coef = 1.0 + 0j
        for m in range(N + 1):
            X[m, mm] = base * coef * zvals[mm + m]
            coef *= (sigma + m) / (m + 1) * (-delta)
    # binomial change from powers of the image to the source basis
    Bin = np.zeros((N + 1, N + 1), dtype=complex)
    for k in range(N + 1):
        for mm in range(k + 1):
            Bin[mm, k] = math.comb(k, mm) * (-cj) ** (k - mm)
        Bin[:, k] /= rj ** k
    return X @ Bin


# ------------------------------------------------------------------ assembly

def _branch_terms(ctx: HeckeContext, explicit: int):
    """(target, source, n, is_tail) for the full operator.  Tails are split into
    ``explicit`` single branches followed by a shifted Hurwitz tail."""
    terms = []
    for (i, j), ns in sorted(index_sets(ctx).items()):
        for n in sorted(ns.finite):
            terms.append((i, j, n, False))
        if ns.at_least is not None:
            for t in range(explicit):
                terms.append((i, j, ns.at_least + t, False))
            terms.append((i, j, ns.at_least + explicit, True))
        if ns.at_most is not None:
            for t in range(explicit):
                terms.append((i, j, ns.at_most - t, False))
            terms.append((i, j, ns.at_most - explicit, True))
    return terms


def _block(ctx, n, is_tail, s, ci, ri, cj, rj, N, reflect=False):
    f = tail_block if is_tail else single_branch_block
    return f(ctx.lam, n, s, ci, ri, cj, rj, N, reflect)


def r_orbit(ctx: HeckeContext) -> list[float]:
    """Points of the periodic orbit of ``r`` computed as attracting fixed points
    of the rotated period words (no float iteration of the map)."""
    from .hecke_core import attracting_fixed_point, word_matrix

    word = r_period_word(ctx)
    pts = []
    for t in range(len(word)):
        rot = word[t:] + word[:t]
        pts.append(attracting_fixed_point(word_matrix(ctx, 0, rot).matrix))
    return pts


def assemble(
    ctx: HeckeContext, discs: DiscSystem, spec: OperatorSpec, s: complex, N: int, explicit_tail_terms: int = 4
) -> BlockMatrix:
    s = complex(s)
    if N < 0:
        raise ValueError("N must be >= 0")
    _check_pole(s)
    c = discs.center
    r = discs.radius
    dim = N + 1
    if spec.kind == ELEMENTARY:
        if spec.n == 0:
            raise ValueError("branch index must be nonzero")
        B = _block(ctx, spec.n, spec.tail, s, c(spec.target), r(spec.target), c(spec.source), r(spec.source), N)
        return BlockMatrix((spec.target,), N, B, s, ELEMENTARY, (c(spec.target),), (r(spec.target),))

    if spec.kind == FULL:
        comps = tuple(cell_labels(ctx))
        M = np.zeros((len(comps) * dim, len(comps) * dim), dtype=complex)
        for i, j, n, tail in _branch_terms(ctx, explicit_tail_terms):
            a, b = comps.index(i) * dim, comps.index(j) * dim
            M[a : a + dim, b : b + dim] += _block(ctx, n, tail, s, c(i), r(i), c(j), r(j), N)
        return BlockMatrix(comps, N, M, s, FULL, tuple(map(c, comps)), tuple(map(r, comps)))

    if spec.kind == REDUCED:
        eps = spec.epsilon
        if eps not in (1, -1):
            raise ValueError("epsilon must be +1 or -1")
        comps = tuple(range(1, ctx.kappa + 1))
        M = np.zeros((len(comps) * dim, len(comps) * dim), dtype=complex)
        for i, j, n, tail in _branch_terms(ctx, explicit_tail_terms):
            if i < 0:
                continue
            # g_{-j}(y) = eps g_j(-y) on the eps-eigenspace of the reflection
            reflect = j < 0
            jj = abs(j)
            blk = _block(ctx, n, tail, s, c(i), r(i), c(jj), r(jj), N, reflect)
            a, b = comps.index(i) * dim, comps.index(jj) * dim
            M[a : a + dim, b : b + dim] += eps * blk if reflect else blk
        return BlockMatrix(comps, N, M, s, f"reduced{'+' if eps > 0 else '-'}", tuple(map(c, comps)), tuple(map(r, comps)))

    if spec.kind == K_OP:
        word = r_period_word(ctx)
        kap = len(word)
        mp = build_markov(ctx)
        cells = [mp.cell_of(x) for x in r_orbit(ctx)]
        M = np.zeros((kap * dim, kap * dim), dtype=complex)
        for l in range(kap):
            tgt, src = (l + 1) % kap, l
            ct, cs = cells[tgt], cells[src]
            blk = single_branch_block(ctx.lam, word[l], s, c(ct), r(ct), c(cs), r(cs), N)
            M[tgt * dim : (tgt + 1) * dim, src * dim : (src + 1) * dim] = blk
        return BlockMatrix(tuple(cells), N, M, s, K_OP, tuple(c(x) for x in cells), tuple(r(x) for x in cells))

    raise ValueError(f"unknown operator kind {spec.kind!r}")


def P_matrix(ctx: HeckeContext, N: int) -> BlockMatrix:
    """Reflection ``(P g)_i(z) = g_{-i}(-z)`` in the scaled basis."""
    comps = tuple(cell_labels(ctx))
    dim = N + 1
    sign = np.diag((-1.0) ** np.arange(dim))
    P = np.zeros((len(comps) * dim, len(comps) * dim))
    for a, i in enumerate(comps):
        b = comps.index(-i)
        P[a * dim : (a + 1) * dim, b * dim : (b + 1) * dim] = sign
    return BlockMatrix(comps, N, P.astype(complex), 0j, "P")


def reduced_by_projection(full: BlockMatrix, eps: int) -> np.ndarray:
    """Restriction of a reflection-symmetric matrix to the ``eps`` eigenspace,
    written in the coordinates of the positive components."""
    k = len(full.components) // 2
    dim = full.N + 1
    n = k * dim
    sign = np.diag(np.tile((-1.0) ** np.arange(dim), k))
    return full.data[:n, :n] + eps * full.data[:n, n:] @ sign


# ------------------------------------------------------------- linear algebra

def _arr(m) -> np.ndarray:
    return m.data if isinstance(m, BlockMatrix) else np.asarray(m)


def trace_power(m, k: int) -> complex:
    if k < 1:
        raise ValueError("k must be >= 1")
    return complex(np.trace(np.linalg.matrix_power(_arr(m), k)))


def fredholm_det(m) -> complex:
    """``det(I - M)`` by LU factorization."""
    A = _arr(m)
    return complex(np.linalg.det(np.eye(A.shape[0]) - A))


def spectrum(m, top: Optional[int] = None) -> np.ndarray:
    ev = np.linalg.eigvals(_arr(m))
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    return ev if top is None else ev[:top]


def contraction_rate(ctx: HeckeContext) -> float:
    """Product of ``|x|`` over the orbit of ``r``, in closed form."""
    lam = ctx.lam
    if ctx.even:
        return math.sqrt((2 - lam) / (2 + lam))
    return (2 - lam) / (2 + ctx.R * lam)


@dataclass(frozen=True)
class ClosedFormDet:
    value: complex
    tail_bound: float


def closed_form_K_det(ctx: HeckeContext, s: complex, n_max: int = 50) -> ClosedFormDet:
    """``prod_{n=0}^{n_max} (1 - l^(2s+2n))`` with ``l`` the orbit contraction."""
    if n_max < 20:
        raise ValueError("n_max must be >= 20")
    l = contraction_rate(ctx)
    assert 0 < l < 1
    s = complex(s)
    val = 1.0 + 0j
    for n in range(n_max + 1):
        val *= 1 - np.exp((2 * s + 2 * n) * math.log(l))
    # |log prod_{n > n_max}| <= 2 sum |l^(2s+2n)| for small terms
    first = l ** (2 * s.real + 2 * (n_max + 1))
    return ClosedFormDet(complex(val), 2 * first / (1 - l * l) * abs(val))
