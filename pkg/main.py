import argparse
import logging
import sys
from typing import Optional, Sequence

from app.commands import tradeoff, train, validate
from app.core.exceptions import AirCompError, ScenarioError
from app.core.logging import setup_logging

logger = logging.getLogger("aircomp_dp_fl")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the command-line parser."""

    parser = argparse.ArgumentParser(
        prog="aircomp-dp-fl",
        description="Differentially private over-the-air federated learning simulator",
    )
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")

    # Register subcommands
    subparsers = parser.add_subparsers(dest="command", required=True)
    tradeoff.add_parser(subparsers)
    train.add_parser(subparsers)
    validate.add_parser(subparsers)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit codes."""
    args = create_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        return int(args.handler(args))
    except ScenarioError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    except (AirCompError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
