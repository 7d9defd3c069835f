"""``abench`` command-line front end.

Exit codes
----------
0  success (``bench`` also returns 0 when some rows fail: failures are data)
2  usage or configuration error, unknown problem, bad method string
3  ``run`` did not converge; ``check`` had a failing suite
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import checks
from .dofc import DofcSpec, csv_text, pgm_text, sweep
from .errors import MethodParseError, ProblemLookupError
from .harness import (
    RESIDUAL,
    Termination,
    benchmark_matrix,
    history_csv,
    render_csv,
    render_markdown,
    solve,
)
from .problems import get_problem, list_problems, p2d_roots, parse_problem_ref
from .solvers import MethodSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILED = 3

DEFAULT_SUITE = ["B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8"]
DEFAULT_METHODS = ["newton", "na1", "ks:1.0:0.9"]

EPILOG = """exit codes:
  0  success (bench rows marked F still count as success)
  2  usage error: unknown flag, unknown problem, bad method string or root
  3  run did not converge, or a check suite failed

environment:
  ABENCH_THREADS  worker processes for dofc sweeps (0 or unset: all cores)
"""


class UsageError(Exception):
    pass


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _params(args, pid: str) -> dict:
    params = {}
    if pid == "P2D" and args.epsilon is not None:
        params["epsilon"] = args.epsilon
    if pid == "D2" and args.omega is not None:
        params["omega"] = args.omega
    return params


def _problem(args, ref: str):
    pid, size = parse_problem_ref(ref)
    return get_problem(pid, size, _params(args, pid))


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _termination(args) -> Termination:
    return Termination(RESIDUAL, args.tol, args.max_iter)


# -- subcommands ---------------------------------------------------------------

def cmd_list(args) -> int:
    lines = ["id,name,sizes"]
    for pid, name, sizes in list_problems():
        lines.append(f"{pid},{name},{' '.join(str(n) for n in sizes)}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    problem = _problem(args, args.problem)
    spec = MethodSpec.parse(args.method, beta=args.beta)
    report = solve(problem, spec, _termination(args))
    _emit(history_csv(report), args.output)
    print(f"{problem.label} {spec.label}: {report.status.value} after {report.iterations} "
          f"iterations", file=sys.stderr)
    return EXIT_OK if report.converged else EXIT_FAILED


def cmd_bench(args) -> int:
    if args.format not in ("csv", "md"):
        raise UsageError("bench writes csv or md")
    refs = _csv_list(args.problems) if args.problems else DEFAULT_SUITE
    methods = _csv_list(args.methods) if args.methods else DEFAULT_METHODS
    specs = [MethodSpec.parse(m, beta=args.beta) for m in methods]
    problems = [_problem(args, r) for r in refs]
    term = _termination(args)
    repeats = 1 if args.no_timing else args.repeats
    table = benchmark_matrix([(p, s, term) for p in problems for s in specs], repeats)
    render = render_markdown if args.format == "md" else render_csv
    _emit(render(table, timing=not args.no_timing), args.output)
    return EXIT_OK


def _dofc_target(problem, root: str) -> np.ndarray:
    if problem.id == "P2D":
        plus, minus = p2d_roots(float(problem.params["epsilon"]))
        if root == "plus":
            return plus
        if root == "minus":
            return minus
    elif problem.id == "D1" and root == "origin":
        return np.zeros(3)
    raise UsageError(f"root selector {root!r} is not valid for problem {problem.id}")


def cmd_dofc(args) -> int:
    pid, _ = parse_problem_ref(args.problem)
    if pid not in ("P2D", "D1"):
        raise UsageError("dofc supports problems P2D and D1")
    fmt = args.format or "pgm"
    if fmt not in ("pgm", "csv"):
        raise UsageError("dofc writes pgm or csv")
    problem = _problem(args, args.problem)
    root = args.root or ("plus" if pid == "P2D" else "origin")
    target = _dofc_target(problem, root)
    if pid == "P2D":
        defaults = dict(x_range=(-1.0, 3.0), y_range=(1.0, 5.0), embed_tail=())
        method = args.method or "newton"
    else:
        defaults = dict(x_range=(-2.0, 2.0), y_range=(-2.0, 2.0), embed_tail=(args.embed,))
        method = args.method or "newton"
    spec = DofcSpec(
        problem=problem,
        target_root=target,
        method=MethodSpec.parse(method, beta=args.beta),
        x_range=args.x_range or defaults["x_range"],
        y_range=args.y_range or defaults["y_range"],
        grid=args.grid,
        max_iter=args.max_iter,
        tol=args.tol,
        embed_tail=defaults["embed_tail"],
    )
    if fmt == "pgm" and spec.max_iter > 255:
        raise UsageError("pgm output needs --max-iter <= 255; use --format csv")
    raster = sweep(spec, workers=args.workers)
    _emit(pgm_text(raster) if fmt == "pgm" else csv_text(raster), args.output)
    print(f"{problem.id} {spec.method.label} root={root}: "
          f"{raster.converged_cells()}/{raster.width * raster.height} cells converged",
          file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    names = args.suite or ["all"]
    for n in names:
        if n != "all" and n not in checks.SUITES:
            raise UsageError(f"unknown suite {n!r}; choose from {', '.join(checks.SUITES)}, all")
    results = checks.run_suites(names)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abench",
        description="Newton, Newton-Anderson and accelerated-Newton solvers with "
                    "benchmark tables and domain-of-convergence sweeps.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, max_iter):
        p.add_argument("--tol", type=float, default=1e-8, help="termination tolerance (default 1e-8)")
        p.add_argument("--max-iter", type=int, default=max_iter,
                       help=f"iteration budget (default {max_iter})")
        p.add_argument("--beta", type=float, default=None,
                       help="damping in (0,1]; default is each problem's own (1, or 0.8 for B6:20)")
        p.add_argument("--epsilon", type=float, default=None, help="P2D perturbation (default 0)")
        p.add_argument("--omega", type=float, default=None, help="D2 albedo (default 1)")
        p.add_argument("--output", "-o", default=None, help="output file (default stdout)")

    p = sub.add_parser("list", help="list registered problems", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("run", help="solve one problem; write the iteration history as CSV",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--problem", required=True, help="problem id, optionally id:size (e.g. B5:1000)")
    p.add_argument("--method", default="newton",
                   help="newton | na<m> | na1s | ks:<C>:<alpha> (default newton)")
    common(p, 1000)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="benchmark table over problems x methods",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--problems", default=None,
                   help="comma-separated ids (default B1..B8 at default sizes)")
    p.add_argument("--methods", default=None,
                   help="comma-separated method strings (default newton,na1,ks:1.0:0.9)")
    p.add_argument("--repeats", type=int, default=100, help="timed repeats per row (default 100)")
    p.add_argument("--no-timing", action="store_true", help="omit the time column (one run per row)")
    p.add_argument("--format", choices=["csv", "md", "pgm"], default="csv")
    common(p, 1000)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dofc", help="domain-of-convergence raster",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--problem", default="P2D", help="P2D or D1 (default P2D)")
    p.add_argument("--root", choices=["plus", "minus", "origin"], default=None,
                   help="target root (P2D: plus/minus, D1: origin)")
    p.add_argument("--method", default=None, help="method string (default newton)")
    p.add_argument("--grid", type=int, default=200, help="points per axis (default 200)")
    p.add_argument("--x-range", type=_range, default=None,
                   help="LO,HI for the first coordinate (P2D -1,3; D1 -2,2)")
    p.add_argument("--y-range", type=_range, default=None,
                   help="LO,HI for the second coordinate (P2D 1,5; D1 -2,2)")
    p.add_argument("--embed", type=float, default=1e-3,
                   help="third coordinate of D1 starts (default 1e-3)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default from ABENCH_THREADS)")
    p.add_argument("--format", choices=["csv", "md", "pgm"], default="pgm")
    common(p, 100)
    p.set_defaults(func=cmd_dofc)

    p = sub.add_parser("check", help="run the property suites",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--suite", action="append", default=None,
                   help=f"suite name, repeatable ({', '.join(checks.SUITES)}, all)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProblemLookupError, MethodParseError) as exc:
        print(f"abench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"abench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
