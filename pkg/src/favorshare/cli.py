"""Command line entry point.

    favorshare run --config run.ini --seed 7 --out results/
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional, Sequence

from .alloc import SharingScenario
from .config import ConfigError, default_config, parse_config, with_overrides
from .radio import Placement
from .report import write_artifacts
from .sim import run_horizon

log = logging.getLogger("favorshare")


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="favorshare",
                                     description="Favor-based inter-operator spectrum sharing simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate one horizon and write result files")
    run.add_argument("--config", help="INI run configuration (defaults apply to missing keys)")
    run.add_argument("--seed", type=_non_negative_int)
    run.add_argument("--snapshots", type=_non_negative_int)
    run.add_argument("--scenario", choices=("pool", "renting"))
    run.add_argument("--placement", choices=("separated", "interleaved"))
    run.add_argument("--out", default="out", help="output directory (default: ./out)")
    run.add_argument("--baseline-only", action="store_true",
                     help="evaluate only the static orthogonal split")
    run.add_argument("--summary-only", action="store_true", help="write summary.txt only")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_command(args: argparse.Namespace) -> int:
    try:
        config = parse_config(args.config) if args.config else default_config()
    except (ConfigError, OSError) as exc:
        print(f"favorshare: config error: {exc}", file=sys.stderr)
        return 1
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.snapshots is not None:
        changes["snapshots"] = args.snapshots
    if args.scenario is not None:
        changes["scenario"] = SharingScenario.parse(args.scenario)
    if args.placement is not None:
        changes["placement"] = Placement.parse(args.placement)
    config = with_overrides(config, **changes)
    try:
        config.validate()
    except ValueError as exc:
        print(f"favorshare: config error: {exc}", file=sys.stderr)
        return 1

    t0 = time.perf_counter()
    result = run_horizon(config, baseline_only=args.baseline_only)
    paths = write_artifacts(result, args.out, summary_only=args.summary_only)
    if args.baseline_only and not args.summary_only:
        paths.transcript.write_text("")
    log.info("%d snapshots in %.1f s, results in %s", config.snapshots,
             time.perf_counter() - t0, args.out)
    print(paths.summary.read_text(), end="")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return run_command(args)
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
