"""Command line entry point: ``verify <scenario...>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .scenario import ScenarioError, load
from .suites import catalogue


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="verify", description="Run exact identity suites on orbifold scenarios.")
    p.add_argument("scenarios", nargs="*", help="scenario JSON files")
    p.add_argument("--zoo", action="store_true", help="run every bundled scenario")
    p.add_argument("--list", action="store_true", help="print the suite catalogue (and the invocations of given scenarios) without running")
    p.add_argument("--parallel", type=int, default=1, metavar="N", help="run suites in N worker processes")
    p.add_argument("--out", type=Path, help="also write the machine-readable report to this path")
    p.add_argument("--format", choices=("text", "machine"), default="text", help="report format on standard output")
    p.add_argument("--test-degree", type=int, default=3, metavar="D", help="degree bound of the currents test families")
    return p


def _list(paths: list[Path]) -> int:
    print(catalogue())
    code = 0
    for path in paths:
        try:
            sc = load(path)
        except ScenarioError as exc:
            print(f"\n{exc}", file=sys.stderr)
            code = 2
            continue
        print(f"\n{path.name}: {sc.name}" + (f": {sc.description}" if sc.description else ""))
        for k, inv in enumerate(sc.suites):
            args = ", ".join(f"{a}={v}" for a, v in harness.suite_args(inv).items())
            print(f"  {k:2} {inv['suite']}({args}) expect {inv.get('expect', 'holds')}")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    paths = [Path(p) for p in args.scenarios]
    if args.zoo:
        paths = harness.zoo_paths() + paths
    if args.list:
        return _list(paths)
    if not paths:
        print("verify: give scenario files or --zoo", file=sys.stderr)
        return 2
    if args.parallel < 1 or args.test_degree < 0:
        print("verify: --parallel must be positive and --test-degree non-negative", file=sys.stderr)
        return 2
    report = harness.run(paths, parallel=args.parallel, test_degree=args.test_degree)
    if args.out is not None:
        args.out.write_text(harness.machine(report) + "\n", encoding="utf-8")
    print(harness.machine(report) if args.format == "machine" else harness.text(report))
    return harness.exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
