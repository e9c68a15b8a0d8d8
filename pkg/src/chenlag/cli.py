"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical violation is
found, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import verifier as V
from .curvature import chen_delta
from .qp_hyperplane import build_fr, closed_form_max, maximize_on_hyperplane
from .tensor_core import TensorError, load_tensor

CSV_COLUMNS = [
    "n", "c", "seed", "index", "delta", "classicRHS", "improvedRHS",
    "classicMargin", "improvedMargin", "normHsq", "pass",
]


class UsageError(Exception):
    pass


def _float_list(x):
    return [float(v) for v in np.asarray(x).ravel()]


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _require_n(n):
    if n < 3:
        raise UsageError(f"--n must be at least 3, got {n}")


def _record_row(rep: V.BoundReport, seed, index) -> dict:
    return {
        "n": rep.n, "c": rep.c, "seed": seed, "index": index, "delta": rep.delta,
        "classicRHS": rep.classicRHS, "improvedRHS": rep.improvedRHS,
        "classicMargin": rep.classicMargin, "improvedMargin": rep.improvedMargin,
        "normHsq": rep.meanCurvNormSq, "pass": rep.classicPass and rep.improvedPass,
    }


def _write_records(out, rows, fmt, summary=None):
    if fmt == "csv":
        w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    elif fmt == "json":
        for row in rows:
            out.write(json.dumps(row) + "\n")
        if summary is not None:
            out.write(json.dumps({"summary": summary}) + "\n")
    else:
        if summary is not None:
            for k, v in summary.items():
                if k != "histogram":
                    out.write(f"{k}: {v}\n")
        else:
            for row in rows:
                for k, v in row.items():
                    out.write(f"{k}: {v}\n")


def _emit(out, payload: dict, fmt):
    if fmt == "json":
        out.write(json.dumps(payload) + "\n")
    elif fmt == "csv":
        flat = {k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in payload.items()}
        w = csv.DictWriter(out, fieldnames=list(flat), lineterminator="\n")
        w.writeheader()
        w.writerow(flat)
    else:
        for k, v in payload.items():
            out.write(f"{k}: {v}\n")


def cmd_invariant(args) -> int:
    if args.input is None:
        raise UsageError("invariant requires --input FILE")
    h = load_tensor(args.input)
    s = chen_delta(h, args.c)
    payload = {
        "n": h.n, "c": args.c, "tau": s.tau, "minK": s.minK,
        "argmin": {"u": _float_list(s.argmin.u), "v": _float_list(s.argmin.v)},
        "delta": s.delta, "converged": s.converged,
    }
    with _sink(args.output) as out:
        _emit(out, payload, args.format)
    return 0


def cmd_verify(args) -> int:
    if args.input is not None:
        h = load_tensor(args.input)
        rep = V.verify_point(h, args.c, args.tol)
        with _sink(args.output) as out:
            _write_records(out, [_record_row(rep, None, 0)], args.format)
        return 0 if rep.classicPass and rep.improvedPass else 1
    _require_n(args.n)
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if args.sigma < 0:
        raise UsageError("--sigma must be non-negative")
    summary = V.batch_verify(args.n, args.c, args.count, args.sigma, args.seed, args.tol, workers=args.workers)
    rows = [_record_row(r, args.seed, i) for i, r in enumerate(summary.records)]
    with _sink(args.output) as out:
        _write_records(out, rows, args.format, summary.as_dict())
    if args.output is not None and args.format != "text":
        sys.stderr.write(f"violations: {summary.violations}  min margin: {summary.minMargin!r}\n")
    return 0 if summary.violations == 0 and summary.classicViolations == 0 else 1


def cmd_maximize(args) -> int:
    _require_n(args.n)
    if args.r is None or not 1 <= args.r <= args.n:
        raise UsageError(f"--r must lie in 1..{args.n}")
    value, x = closed_form_max(args.n, args.r, args.k)
    sol = maximize_on_hyperplane(build_fr(args.n, args.r), args.k)
    diff = abs(sol.value - value)
    ok = diff <= args.tol * max(1.0, abs(value))
    payload = {
        "n": args.n, "r": args.r, "k": args.k,
        "closedFormValue": value, "closedFormArgmax": _float_list(x),
        "kktValue": sol.value, "kktArgmax": _float_list(sol.argmax),
        "multiplier": sol.multiplier, "verdict": sol.verdict.value,
        "projectedSpectrum": _float_list(sol.projectedSpectrum),
        "difference": diff, "agree": ok,
    }
    with _sink(args.output) as out:
        _emit(out, payload, args.format)
    return 0 if ok else 1


def _search_cfg(args, tol):
    return V.SearchConfig(
        restarts=args.restarts, steps=args.steps, stepSize=args.step_size, seed=args.seed, tol=tol
    )


def cmd_search(args) -> int:
    _require_n(args.n)
    res = V.adversarial_search(args.n, args.c, _search_cfg(args, args.tol))
    payload = {
        "n": args.n, "c": args.c, "restarts": args.restarts, "steps": args.steps, "seed": args.seed,
        "worstMargin": res.margin, "violation": res.margin > args.tol,
        "worstTensor": [{"idx": list(t), "value": v} for t, v in res.h.components()],
    }
    with _sink(args.output) as out:
        _emit(out, payload, args.format)
    return 1 if res.margin > args.tol else 0


def cmd_probe(args) -> int:
    _require_n(args.n)
    tol = args.tol if args.tol_given else 1e-6
    rep = V.minimality_probe(args.n, args.c, _search_cfg(args, tol))
    payload = {
        "n": args.n, "c": args.c, "seed": args.seed, "found": rep.found,
        "classicMargin": rep.classicMargin, "normHsq": rep.meanCurvNormSq,
        "marginThreshold": rep.marginThreshold, "normThreshold": rep.normThreshold,
    }
    with _sink(args.output) as out:
        _emit(out, payload, args.format)
    return 1 if rep.found else 0


def cmd_audit(args) -> int:
    if args.input is not None:
        h = load_tensor(args.input)
        rec = V.proof_step_audit(h, args.c)
        payload = {"n": h.n, "c": args.c, **{k: getattr(rec, k) for k in rec.__dataclass_fields__}}
        ok = rec.ok
    else:
        _require_n(args.n)
        payload = V.audit_batch(args.n, args.c, args.count, args.sigma, args.seed)
        ok = not any(payload["failures"].values())
    with _sink(args.output) as out:
        _emit(out, payload, args.format)
    return 0 if ok else 1


def cmd_compare(args) -> int:
    if args.nmax < 3:
        raise UsageError("--nmax must be at least 3")
    rows = V.coefficient_comparison(args.nmax)
    ok = all(r["f1_below_fr"] and r["improved_below_classic"] and r["gap_is_4n_minus_9"] for r in rows)
    with _sink(args.output) as out:
        if args.format == "json":
            for r in rows:
                out.write(json.dumps(r) + "\n")
        elif args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["n", "(n-2)(2n+3)", "(2n-3)(n+1)", "(2n-3)(n-1)", "gap", "holds"])
            for r in rows:
                a, b = r["f1_vs_fr"]
                w.writerow([r["n"], a, b, r["improved_vs_classic"][0], r["gap"],
                            r["f1_below_fr"] and r["improved_below_classic"] and r["gap_is_4n_minus_9"]])
        else:
            out.write(f"n = 3..{args.nmax}: all orderings hold: {ok}\n")
    return 0 if ok else 1


COMMANDS = {
    "invariant": cmd_invariant,
    "verify": cmd_verify,
    "maximize": cmd_maximize,
    "search": cmd_search,
    "probe": cmd_probe,
    "audit": cmd_audit,
    "compare": cmd_compare,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=3)
    common.add_argument("--c", type=float, default=0.0)
    common.add_argument("--r", type=int)
    common.add_argument("--k", type=float, default=1.0)
    common.add_argument("--count", type=int, default=1000)
    common.add_argument("--sigma", type=float, default=1.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--input", metavar="FILE")
    common.add_argument("--output", metavar="FILE")
    common.add_argument("--format", choices=["json", "csv", "text"], default="text")
    common.add_argument("--restarts", type=int, default=100)
    common.add_argument("--steps", type=int, default=20)
    common.add_argument("--step-size", type=float, default=0.2)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--nmax", type=int, default=100)

    parser = _Parser(prog="chenlag", description="Chen invariant bounds for Lagrangian submanifolds.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.tol_given = args.tol is not None
    if args.tol is None:
        args.tol = V.DEFAULT_TOL
    try:
        return COMMANDS[args.subcommand](args)
    except (UsageError, TensorError, ValueError, OSError) as exc:
        sys.stderr.write(f"chenlag {args.subcommand}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
