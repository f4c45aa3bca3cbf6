"""Command-line front end: ``formlab <subcommand> scenario.toml [flags]``.

Each analysis subcommand runs the matching ``[analysis.<name>]`` table of the
scenario; ``run`` runs every table and ``sweep`` runs one over ``--levels``.
Exit codes: 0 completed (verdicts are data), 2 invalid scenario or
unresolvable family (nothing written), 3 solver cap reached (reports kept).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .scenario import ANALYSES, ScenarioError, load_scenario, run_scenario, with_overrides

log = logging.getLogger("formlab")


def _load(args: argparse.Namespace):
    sc = load_scenario(args.scenario)
    return with_overrides(sc, args.grid, args.levels, args.seed, args.tol)


def _run(args: argparse.Namespace, only: list[str] | None) -> int:
    try:
        sc = _load(args)
    except ScenarioError as exc:
        log.error("%s", exc)
        return 2
    return run_scenario(sc, only, args.out, args.format)


def cmd_analysis(args: argparse.Namespace) -> int:
    return _run(args, [args.command])


def cmd_run(args: argparse.Namespace) -> int:
    return _run(args, None)


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.levels:
        log.error("sweep needs --levels")
        return 2
    return _run(args, [args.analysis])


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", type=Path, help="TOML scenario file")
    p.add_argument("--grid", default=None, help="override the grid as DIMxPOINTS, e.g. 3x32")
    p.add_argument("--levels", default=None, help="comma separated refinement levels, e.g. 16,32,64")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="relative residual target of the eigen-solvers")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: scenario 'out')")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ANALYSES:
        p = sub.add_parser(name, help=f"run the [analysis.{name}] table")
        _common(p)
        p.set_defaults(func=cmd_analysis)
    p = sub.add_parser("sweep", help="run one analysis over --levels and write its refinement trace")
    _common(p)
    p.add_argument("--analysis", required=True, choices=sorted(ANALYSES))
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("run", help="run every analysis table of the scenario")
    _common(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
