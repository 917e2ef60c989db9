import argparse
import logging
import os
import sys
from logging.config import fileConfig
from typing import List, Optional

from solver_main_utils import SUBCOMMANDS, run_study

fileConfig(
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "logging.conf"),
    disable_existing_loggers=False,
)
logging.info("Configured logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solver_main",
        description="Run degenerate parabolic solver studies from a JSON configuration",
    )
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="path of the JSON configuration")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration value, e.g. scheme.M=0.001 (repeatable)",
    )
    parser.add_argument("--out", help="output directory, replaces output.directory")
    parser.add_argument(
        "--workers", type=int, help="worker processes of a sweep, replaces study_params.workers"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.directory={args.out}")
    if args.workers is not None:
        overrides.append(f"study_params.workers={args.workers}")
    return run_study(args.subcommand, args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
