import argparse
import logging
import sys
from typing import List, Optional

import structlog

from wbk.loggers import configure_logging
from wbk.runner import execute
from wbk.types.config import load_config
from wbk.types.errors import ParseError
from wbk.types.main import LogFormat
from wbk.utils.formatting import format_summary

logger = structlog.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbk",
        description="Weighted Bergman kernel experiments. Exit status is 0 iff every asserted check passed.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="Run the experiment described by a TOML config.")
    run.add_argument("config", help="Path to the experiment config.")
    run.add_argument("--out", default=None, help="Output directory (overrides output.directory).")
    run.add_argument(
        "--seed-grid",
        type=int,
        default=None,
        metavar="N",
        help="Number of compact sample-grid points (overrides numeric.grid_count).",
    )
    run.add_argument("--quiet", action="store_true", help="Only log errors and skip the summary.")
    run.add_argument(
        "--log-format",
        choices=[str(f) for f in LogFormat],
        default=None,
        help="Log renderer (defaults to the LOG_FORMAT setting).",
    )
    return parser


def run_command(args: argparse.Namespace) -> int:
    if args.seed_grid is not None and args.seed_grid < 1:
        logger.error(f"--seed-grid must be >= 1, got {args.seed_grid}")
        return 2
    try:
        config = load_config(args.config)
    except ParseError as exc:
        logger.error(f"{args.config}: {exc}")
        return 2
    except OSError as exc:
        logger.error(f"cannot read {args.config}: {exc}")
        return 2

    manifest = execute(config, out_dir=args.out, grid_count=args.seed_grid)
    if not args.quiet:
        print("\n".join(format_summary(manifest)))
    return 0 if manifest.passed else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(logging.ERROR if args.quiet else logging.INFO, log_format=args.log_format)
    if args.command == "run":
        return run_command(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
