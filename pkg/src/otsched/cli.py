"""Command-line interface.

Exit codes: 0 success, 1 infeasible model, 2 schedule failed validation,
3 bad input or usage, 4 solver resource limit.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import simplex
from .bnb import NODE_LIMIT, NodeLimitError, solve_lexicographic, solve_milp
from .formulation import FormulationOptions, build_model, extract_allocation
from .instance import InstanceError, data_path, dump_instance, load_instance, paper_instance
from .oracle import SearchSpaceError, brute_force
from .report import (
    FORMATS,
    ScheduleError,
    evaluate_schedule,
    load_schedule,
    render_report,
    schedule_to_csv,
    validate_schedule,
)
from .simplex import IterationLimitError, solve_lp

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
EXIT_INPUT = 3
EXIT_LIMIT = 4

FORMAT_ENV = "OTSCHED_FORMAT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_format() -> str:
    fmt = os.environ.get(FORMAT_ENV, "text").strip().lower()
    return fmt if fmt in FORMATS else "text"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="otsched", description="Operating-room allocation over a work week.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve an instance and report the schedule")
    solve.add_argument("instance", nargs="?", help="instance YAML file")
    solve.add_argument("--demo", action="store_true", help="use the built-in five-day instance")
    mode = solve.add_mutually_exclusive_group()
    mode.add_argument("--integer", dest="integer", action="store_true", default=True,
                      help="integer room counts (default)")
    mode.add_argument("--relaxed", dest="integer", action="store_false",
                      help="fractional room counts (LP relaxation)")
    solve.add_argument("--tight", action="store_true",
                       help="second stage minimizing total over-allocation (needs --integer)")
    solve.add_argument("--format", choices=FORMATS, default=None)
    solve.add_argument("--out", help="write the report here instead of stdout")
    solve.add_argument("--schedule-out", help="also write the allocation grid as CSV")
    solve.add_argument("--node-limit", type=int, default=NODE_LIMIT)
    solve.add_argument("--kernel", choices=simplex.available_backends(), default=None,
                       help="simplex kernel (default: compiled when built)")
    solve.add_argument("--verbose", action="store_true", help="trace pivots and nodes on stderr")

    validate = sub.add_parser("validate", help="check a schedule against an instance")
    validate.add_argument("files", nargs="+", metavar="FILE", help="INSTANCE SCHEDULE, or SCHEDULE with --demo")
    validate.add_argument("--demo", action="store_true")
    validate.add_argument("--integral", action="store_true", help="require integer room counts")
    validate.add_argument("--tolerance", type=float, default=1e-6,
                          help="slack on capacity and under-allocation limits")

    report = sub.add_parser("report", help="evaluate a schedule (never fails on infeasibility)")
    report.add_argument("files", nargs="+", metavar="FILE", help="INSTANCE SCHEDULE, or SCHEDULE with --demo")
    report.add_argument("--demo", action="store_true")
    report.add_argument("--format", choices=FORMATS, default=None)
    report.add_argument("--out")

    files = sub.add_parser("demo-files", help="write the demo instance and reference schedules to a directory")
    files.add_argument("directory")

    oracle = sub.add_parser("oracle", help=argparse.SUPPRESS)
    oracle.add_argument("instance", nargs="?")
    oracle.add_argument("--demo", action="store_true")
    return parser


def _instance(path, demo):
    if demo:
        if path:
            raise UsageError("give either an instance file or --demo, not both")
        return paper_instance()
    if not path:
        raise UsageError("an instance file (or --demo) is required")
    return load_instance(path)


def _instance_and_schedule(args):
    want = 1 if args.demo else 2
    if len(args.files) != want:
        raise UsageError("expected SCHEDULE with --demo" if args.demo else "expected INSTANCE SCHEDULE")
    inst = paper_instance() if args.demo else load_instance(args.files[0])
    return inst, load_schedule(inst, args.files[-1])


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _explain_infeasible(instance) -> str:
    dur = instance.durations()
    avail = instance.availabilities()
    reachable = float(np.sum(dur * avail))
    for dep in instance.departments:
        if dep.target_hours - reachable > dep.under_limit + 1e-9:
            return (
                f"department {dep.id!r} can receive at most {reachable:g} h against a target of "
                f"{dep.target_hours:g} h, so its under-allocation limit of {dep.under_limit:g} h is unattainable"
            )
    need = sum(max(0.0, d.target_hours - d.under_limit) for d in instance.departments)
    return (
        f"the under-allocation limits cannot all be met together "
        f"(capacity {reachable:g} h, at least {need:g} h required)"
    )


def cmd_solve(args) -> int:
    if args.tight and not args.integer:
        raise UsageError("--tight requires --integer")
    instance = _instance(args.instance, args.demo)
    fmt = args.format or _default_format()
    started = time.perf_counter()
    if args.tight:
        sol = solve_lexicographic(instance, node_limit=args.node_limit, verbose=args.verbose,
                                  backend=args.kernel)
        detail = f"{sol.nodes_explored} nodes"
    else:
        problem = build_model(instance, FormulationOptions(integer_rooms=args.integer))
        if args.integer:
            sol = solve_milp(problem, node_limit=args.node_limit, verbose=args.verbose, backend=args.kernel)
            detail = f"{sol.nodes_explored} nodes"
        else:
            sol = solve_lp(problem, verbose=args.verbose, backend=args.kernel)
            detail = f"{sol.iterations} simplex iterations"
    elapsed = time.perf_counter() - started

    if sol.status != simplex.OPTIMAL:
        print(f"{sol.status}: {_explain_infeasible(instance)}", file=sys.stderr)
        return EXIT_INFEASIBLE

    allocation = extract_allocation(instance, sol)
    report = evaluate_schedule(instance, allocation)
    _emit(render_report(report, fmt), args.out)
    if args.schedule_out:
        Path(args.schedule_out).write_text(schedule_to_csv(instance, allocation), encoding="utf-8")
    extra = f", over-allocation {sol.stage2_objective:.6f} h" if args.tight else ""
    print(f"optimal: objective {sol.objective:.6f}{extra} ({detail}, {elapsed:.3f} s)", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    instance, allocation = _instance_and_schedule(args)
    verdict = validate_schedule(instance, allocation, require_integral=args.integral, tolerance=args.tolerance)
    if verdict.passed:
        print("pass")
        return EXIT_OK
    print(f"fail: {len(verdict.violations)} violation(s)")
    for v in verdict.violations:
        print(f"  {v}", file=sys.stderr)
    return EXIT_INVALID


def cmd_report(args) -> int:
    instance, allocation = _instance_and_schedule(args)
    report = evaluate_schedule(instance, allocation)
    _emit(render_report(report, args.format or _default_format()), args.out)
    return EXIT_OK


def cmd_demo_files(args) -> int:
    out = Path(args.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "demo.yaml").write_text(dump_instance(paper_instance()), encoding="utf-8")
    for name in ("table3.csv", "table4.csv", "infeasible.yaml"):
        (out / name).write_text(data_path(name).read_text(encoding="utf-8"), encoding="utf-8")
    print(f"wrote demo files to {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = _instance(args.instance, args.demo)
    res = brute_force(instance)
    if not res.feasible:
        print(f"infeasible ({res.n_evaluated} schedules enumerated)")
        return EXIT_INFEASIBLE
    print(f"primary {res.primary:.12g} secondary {res.secondary:.12g} "
          f"({res.n_optimal} optimal of {res.n_evaluated} schedules)")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "validate": cmd_validate,
    "report": cmd_report,
    "demo-files": cmd_demo_files,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "verbose", False):
            logging.basicConfig(level=logging.DEBUG, stream=sys.stderr, format="%(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InstanceError, ScheduleError, SearchSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IterationLimitError, NodeLimitError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
