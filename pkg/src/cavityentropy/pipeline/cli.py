"""``cavityentropy`` command line: batch runs driven by a JSON configuration.

Exit status: 0 success, 2 configuration error, 3 solver failure,
4 analysis failure (including missing caches and too few scaling points).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from ..errors import CacheError, CavityEntropyError, ConfigError, SolverError
from . import commands
from .config import RunConfig, apply_seed_schedule, load_config

COMMANDS = {
    "solve-disk": commands.cmd_solve_disk,
    "sweep-ellipse": commands.cmd_sweep_ellipse,
    "resolve": commands.cmd_resolve,
    "fit-scaling": commands.cmd_fit_scaling,
    "report": commands.cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityentropy",
        description="Microcavity resonances and entropy-based mesh resolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the configuration)")
        p.add_argument("--cache", help="cache directory (overrides the configuration)")
        p.add_argument("--workers", type=int, help="worker processes (overrides the configuration)")
        p.add_argument("--seed-schedule", help="CSV with columns m,ell and/or N overriding modes / schedule")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Configuration file plus command-line overrides (validated)."""
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.cache is not None:
        changes["cache_dir"] = args.cache
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        cfg = replace(cfg, **changes)
    if args.seed_schedule is not None:
        cfg = apply_seed_schedule(cfg, args.seed_schedule)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return commands.EXIT_CONFIG if exc.code else commands.EXIT_OK
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return commands.EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return commands.EXIT_CONFIG
    except CacheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return commands.EXIT_ANALYSIS
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return commands.EXIT_SOLVER
    except CavityEntropyError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return commands.EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
