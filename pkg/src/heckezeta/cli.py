"""Command line entry point.

Exit codes: 0 success, 2 a verification failed, 64 usage error, 74 output
could not be written.
"""
from __future__ import annotations

import os

if "THREADS" in os.environ:  # must precede the numpy import
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["THREADS"])

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

import numpy as np

from .hecke_core import DUAL, REGULAR, DomainError, expand, make_context
from .operator import FULL, K_OP, REDUCED, OperatorSpec, assemble, fredholm_det
from .orbits import partition_function, prime_orbits
from .partition import build_markov, check_markov, index_sets, search_discs, verify_discs
from .specfun import PoleError
from .zeta import (
    REDUCED_ROUTE,
    FULL_ROUTE,
    ContainmentError,
    NotAnEigenvalueError,
    eigenfunction,
    functional_residual,
    parse_path,
    ruelle_zeta,
    scan_zeros,
    selberg_zeta,
)

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_USAGE = 64
EXIT_IO = 74

Q_RANGE = range(3, 13)


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


# ------------------------------------------------------------------ output

def _fmt(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    out = format(x, ".16g")
    if out in ("-0", "0"):
        return "0"
    return out


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return {"im": float(obj.imag), "re": float(obj.real)}
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def to_json(obj: Any) -> str:
    """Sorted keys, 16 significant digits, complex as ``{re, im}``."""
    obj = _plain(obj)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {to_json(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def emit(text: str, path: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ------------------------------------------------------------------ parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_s(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot parse s={text!r}; expected 're' or 're,im'")


def parse_grid(text: str) -> tuple[float, float, float, str]:
    try:
        body, axis = text.split("@")
        start, stop, step = (float(v) for v in body.split(":"))
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}; expected 'start:stop:step@axis'") from None
    if axis not in ("re", "im"):
        raise UsageError("grid axis must be 're' or 'im'")
    if not step > 0:
        raise UsageError("grid step must be positive")
    return start, stop, step, axis


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heckezeta", description="Transfer operators and Selberg zeta functions of Hecke triangle groups.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, N=True):
        sp.add_argument("--q", type=int, required=True)
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if N:
            sp.add_argument("--N", type=int, default=40)
        sp.add_argument("--base", type=int, default=5, help="enlargement base where the search starts")

    sp = sub.add_parser("expand", help="lambda-continued fraction digits of x")
    common(sp, N=False)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--mode", choices=(REGULAR, DUAL), default=REGULAR)
    sp.add_argument("--max-digits", type=int, default=40)

    sp = sub.add_parser("partition", help="Markov cells, index sets and discs")
    common(sp, N=False)

    sp = sub.add_parser("orbits", help="prime periodic orbits up to a length")
    common(sp, N=False)
    sp.add_argument("--max-length", type=float, default=6.0)
    sp.add_argument("--digit-bound", type=int, default=50)

    sp = sub.add_parser("det", help="Fredholm determinant det(1 - M)")
    common(sp)
    sp.add_argument("--op", choices=("full", "reduced+", "reduced-", "K"), default="full")
    sp.add_argument("--s", required=True)

    sp = sub.add_parser("zeta", help="Selberg or Ruelle zeta from determinants")
    common(sp)
    sp.add_argument("--s", required=True)
    sp.add_argument("--kind", choices=("selberg", "ruelle"), default="selberg")
    sp.add_argument("--route", choices=(FULL_ROUTE, REDUCED_ROUTE), default=FULL_ROUTE)

    sp = sub.add_parser("scan", help="zeros along a grid")
    common(sp)
    sp.add_argument("--grid", required=True, help="start:stop:step@axis")
    sp.add_argument("--at", type=float, default=None, help="fixed coordinate (default Re s = 1/2 or Im s = 0)")
    sp.add_argument("--epsilon", type=int, choices=(1, -1), default=None)
    sp.add_argument("--refine-tol", type=float, default=1e-6)

    sp = sub.add_parser("eigfun", help="eigenfunction at eigenvalue 1")
    common(sp)
    sp.add_argument("--s", required=True)
    sp.add_argument("--epsilon", type=int, choices=(1, -1), default=1)
    sp.add_argument("--residual", action="store_true", help="also evaluate the functional equation")

    sp = sub.add_parser("verify", help="discs, Markov partition and trace identity")
    common(sp)
    sp.add_argument("--digit-bound", type=int, default=50)
    sp.add_argument("--s", default="2")
    return p


# ------------------------------------------------------------------ commands

def _ctx(q: int):
    if q not in Q_RANGE:
        raise UsageError(f"q={q} is not supported; this build handles 3 <= q <= 12")
    return make_context(q)


def _discs(args, ctx):
    return search_discs(ctx, start=args.base)


def cmd_expand(args):
    ctx = _ctx(args.q)
    e = expand(ctx, args.x, args.mode, args.max_digits)
    out = {"a0": e.a0, "digits": list(e.digits), "complete": e.complete, "kind": e.kind}
    if e.period is not None:
        out["period"] = e.period
    return out


def cmd_partition(args):
    ctx = _ctx(args.q)
    mp = build_markov(ctx)
    d = _discs(args, ctx)
    rep = verify_discs(ctx, d, strict=False)
    return {
        "q": ctx.q,
        "cells": {str(k): list(v) for k, v in mp.intervals.items()},
        "index_sets": {f"{i},{j}": str(ns) for (i, j), ns in sorted(index_sets(ctx).items())},
        "discs": {str(k): {"center": d.center(k), "radius": d.radius(k)} for k in d.intervals},
        "enlargement": {str(k): v for k, v in sorted(d.enlargement.items())},
        "disc_check": {"ok": rep.ok, "worst_margin": rep.worst()[3]},
    }


def cmd_orbits(args):
    ctx = _ctx(args.q)
    recs = prime_orbits(ctx, args.max_length, args.digit_bound)
    if args.format == "csv":
        rows = [(" ".join(map(str, r.word.digits)), r.length, r.fixed_point) for r in recs]
        return to_csv(("word", "length", "fixed_point"), rows)
    return [{"word": list(r.word.digits), "length": r.length, "fixed_point": r.fixed_point} for r in recs]


def _op_spec(op: str) -> OperatorSpec:
    return {
        "full": OperatorSpec(FULL),
        "reduced+": OperatorSpec(REDUCED, epsilon=1),
        "reduced-": OperatorSpec(REDUCED, epsilon=-1),
        "K": OperatorSpec(K_OP),
    }[op]


def cmd_det(args):
    ctx = _ctx(args.q)
    s = parse_s(args.s)
    d = _discs(args, ctx)
    spec = _op_spec(args.op)
    val = fredholm_det(assemble(ctx, d, spec, s, args.N))
    prev = fredholm_det(assemble(ctx, d, spec, s, max(args.N - 10, 4)))
    return {"det": val, "gap": abs(val - prev), "N": args.N, "op": args.op, "q": ctx.q, "s": s}


def cmd_zeta(args):
    ctx = _ctx(args.q)
    s = parse_s(args.s)
    d = _discs(args, ctx)
    if args.kind == "ruelle":
        z = ruelle_zeta(ctx, s, args.N, d)
    else:
        z = selberg_zeta(ctx, s, args.N, d, args.route)
    return {"value": z.value, "gap": z.convergence_gap, "N": z.N, "kind": args.kind, "q": ctx.q, "s": s}


def cmd_scan(args):
    ctx = _ctx(args.q)
    start, stop, step, axis = parse_grid(args.grid)
    fixed = args.at if args.at is not None else (0.5 if axis == "im" else 0.0)
    path = parse_path(start, stop, step, axis, fixed)
    zeros = scan_zeros(ctx, path, args.N, args.refine_tol, _discs(args, ctx), args.epsilon)
    if args.format == "csv":
        rows = [(z.s.real, z.s.imag, z.abs_value, z.convergence_gap, int(z.refined)) for z in zeros]
        return to_csv(("s_re", "s_im", "abs_Z", "convergence_gap", "refined_flag"), rows)
    return [{"s": z.s, "abs_Z": z.abs_value, "convergence_gap": z.convergence_gap, "refined": z.refined} for z in zeros]


def cmd_eigfun(args):
    ctx = _ctx(args.q)
    s = parse_s(args.s)
    try:
        ef = eigenfunction(ctx, s, args.epsilon, args.N, _discs(args, ctx))
    except NotAnEigenvalueError as exc:
        raise VerificationFailed({"error": str(exc), "q": ctx.q, "s": s})
    out = ef.to_json()
    if args.residual:
        out["functional_residual"] = functional_residual(ctx, s, args.epsilon, ef)
    return out


def cmd_verify(args):
    ctx = _ctx(args.q)
    s = parse_s(args.s)
    rows = []
    d = _discs(args, ctx)
    rep = verify_discs(ctx, d, strict=False)
    rows.append(("disc containment", rep.ok, rep.worst()[3]))
    mc = check_markov(ctx)
    rows.append(("markov cover", mc.cover_gap <= 1e-9 and mc.overlap <= 1e-9, max(mc.cover_gap, mc.overlap)))
    rows.append(("markov boundary", mc.boundary_drift <= 1e-9, mc.boundary_drift))
    M = assemble(ctx, d, OperatorSpec(FULL), s, args.N)
    M1 = assemble(ctx, d, OperatorSpec(FULL), s + 1, args.N)
    for k in (1, 2, 3):
        Z = partition_function(ctx, k, s, args.digit_bound)
        dt = np.trace(np.linalg.matrix_power(M.data, k)) - np.trace(np.linalg.matrix_power(M1.data, k))
        err = abs(dt - Z.value)
        rows.append((f"trace identity k={k}", err <= Z.tail_bound + 1e-6 * abs(Z.value), err))
    table = "\n".join(f"{name:<22} {'PASS' if ok else 'FAIL'}  {_fmt(float(v))}" for name, ok, v in rows)
    payload = {
        "q": ctx.q,
        "checks": [{"name": n, "ok": bool(ok), "value": float(v)} for n, ok, v in rows],
    }
    sys.stderr.write(table + "\n")
    if not all(ok for _, ok, _ in rows):
        raise VerificationFailed(payload)
    return payload


COMMANDS = {
    "expand": cmd_expand,
    "partition": cmd_partition,
    "orbits": cmd_orbits,
    "det": cmd_det,
    "zeta": cmd_zeta,
    "scan": cmd_scan,
    "eigfun": cmd_eigfun,
    "verify": cmd_verify,
}


def _render(result, fmt: str) -> str:
    if isinstance(result, str):
        return result
    if fmt == "csv":
        raise UsageError("this subcommand only emits JSON")
    return to_json(result)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        if getattr(args, "N", 40) < 4:
            raise UsageError("N must be >= 4")
        result = COMMANDS[args.command](args)
        code = EXIT_OK
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (DomainError, PoleError, ContainmentError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except VerificationFailed as exc:
        result, code = exc.payload, EXIT_VERIFY
    try:
        emit(_render(result, args.format), args.out)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return EXIT_IO
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
