import argparse

from app.commands.common import add_scenario_arguments, resolve_scenario
from app.services.executor import SweepExecutor
from app.services.reporting import write_tradeoff_csv


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "tradeoff", help="Analytical SNR bounds and measured SNR over the (epsilon, I, P0) grid"
    )
    add_scenario_arguments(parser)
    parser.add_argument("--executor", choices=["local", "celery"], default=None, help="Where sweep points run")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Compute one CSV row per (P0, I, epsilon, policy).

    Returns:
        Exit code
    """
    scenario = resolve_scenario(args)
    rows = SweepExecutor(kind=args.executor).tradeoff(scenario)
    write_tradeoff_csv(rows, scenario.experiment.output_path)
    return 0
