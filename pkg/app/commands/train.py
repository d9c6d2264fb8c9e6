import argparse
import logging

from app.commands.common import add_scenario_arguments, resolve_scenario
from app.services.executor import SweepExecutor
from app.services.reporting import write_training_csv

logger = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="Federated training curves for each policy and client count")
    add_scenario_arguments(parser)
    parser.add_argument("--executor", choices=["local", "celery"], default=None, help="Where training curves run")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Run every (I, policy) training curve and write the per-round trace.

    Returns:
        Exit code
    """
    scenario = resolve_scenario(args)
    rows = SweepExecutor(kind=args.executor).training(scenario)
    if not rows:
        logger.info("No rounds configured; writing header only")
    write_training_csv(rows, scenario.experiment.output_path)
    return 0
