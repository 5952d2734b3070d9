"""Command-line interface.

Exit codes: 0 success, 1 a property check failed, 2 usage or input error,
3 numeric-domain error (the message names the offending eigenvalue).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .catalog import CLASSIFICATIONS, catalog, get_function
from .errors import DomainError, MatrixFormatError, NumericError, UsageError
from .matrix_io import load_matrix, matrix_to_json
from .perspective import PerspectiveOrder, geometric_mean, perspective, relative_entropy, trace_perspective_neg_log
from .regularity import CHECKS, CheckConfig, run_suite

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
SEED_ENV = "PERSPECTA_SEED"
DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_dims(text: str) -> tuple:
    """``"2..6"`` or ``"2,3,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            dims = tuple(range(int(lo), int(hi) + 1))
        else:
            dims = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"cannot parse dims {text!r}; use a..b or a comma list") from None
    if not dims:
        raise UsageError(f"dims {text!r} is empty")
    return dims


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="perspecta", description="Non-commutative perspectives of operator convex functions.")
    parser.add_argument("--version", action="version", version=f"perspecta {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    orders = [o.value for o in PerspectiveOrder]

    p = sub.add_parser("eval", help="evaluate a perspective P_f(A, B)")
    p.add_argument("--a", required=True, help="matrix JSON file for A")
    p.add_argument("--b", required=True, help="matrix JSON file for B")
    p.add_argument("--f", required=True, help="catalog id, e.g. neg_log or pow(1.5)")
    p.add_argument("--order", choices=orders, default=PerspectiveOrder.WEIGHT_FIRST.value)
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("mean", help="geometric mean A # B")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")

    p = sub.add_parser("entropy", help="relative entropy and the trace of the -log perspective")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")

    p = sub.add_parser("catalog", help="list the scalar functions")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--classification", choices=list(CLASSIFICATIONS))

    p = sub.add_parser("verify", help="run the randomized property checks")
    p.add_argument("--suite", default="all",
                   help=f"'all' or a comma list of: {', '.join(CHECKS)}")
    p.add_argument("--f", help="comma list of catalog ids (default: per check)")
    p.add_argument("--dims", default="2..6")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--tol", type=float, help="override every check's tolerance")
    p.add_argument("--seed", type=int, help=f"root seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--order", choices=orders + ["both"], help="default: per check")
    p.add_argument("--report", help="write the JSON run report here")
    p.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_eval(args) -> int:
    f = get_function(args.f)
    a, b = load_matrix(args.a), load_matrix(args.b)
    result = perspective(f, a, b, args.order)
    _emit(result.to_json(), args.out)
    return EXIT_OK


def run_mean(args) -> int:
    g = geometric_mean(load_matrix(args.a), load_matrix(args.b))
    _emit(matrix_to_json(g), args.out)
    return EXIT_OK


def run_entropy(args) -> int:
    a, b = load_matrix(args.a), load_matrix(args.b)
    _emit({"relative_entropy": relative_entropy(a, b),
           "trace_perspective_neg_log": trace_perspective_neg_log(a, b)}, args.out)
    return EXIT_OK


def run_catalog(args) -> int:
    entries = catalog(args.classification)
    if args.format == "json":
        _emit([f.to_json() for f in entries], None)
    else:
        for f in entries:
            print(f.listing())
    return EXIT_OK


def verify_config(args) -> tuple:
    suite = [s.strip() for s in args.suite.split(",") if s.strip()]
    if suite in ([], ["all"]):
        suite = list(CHECKS)
    unknown = [s for s in suite if s not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s) {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    functions = None
    if args.f:
        functions = tuple(get_function(x.strip()).id for x in args.f.split(",") if x.strip())
    cfg = CheckConfig(
        dims=parse_dims(args.dims),
        trials=args.trials,
        tol=args.tol,
        seed=args.seed if args.seed is not None else _default_seed(),
        functions=functions,
        order=args.order,
    )
    return suite, cfg


def run_verify(args) -> int:
    suite, cfg = verify_config(args)
    start = time.perf_counter()
    reports = run_suite(suite, cfg)
    elapsed = time.perf_counter() - start
    passed = all(r.passed for r in reports)
    report = {
        "tool": "perspecta",
        "version": __version__,
        "config": dict(cfg.to_json(), suite=suite),
        "checks": [r.to_json() for r in reports],
        "passed": passed,
        "wall_clock_seconds": elapsed,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.format == "json":
        _emit(report, None)
    else:
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            trials = sum(c.trials for c in r.cells)
            line = f"{status}  {r.check_id:<28} worst margin {r.worst_margin:.2e}  ({trials} trials"
            if r.failures:
                line += f", {len(r.failures)} failures"
            if r.witnesses:
                line += f", {len(r.witnesses)} witnesses"
            print(line + ")")
        print(f"{'PASS' if passed else 'FAIL'}  overall ({elapsed:.1f} s)")
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS = {
    "eval": run_eval,
    "mean": run_mean,
    "entropy": run_entropy,
    "catalog": run_catalog,
    "verify": run_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, MatrixFormatError) as exc:
        print(f"perspecta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NumericError) as exc:
        print(f"perspecta: numeric domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"perspecta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
