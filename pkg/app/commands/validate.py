import argparse
import logging
from pathlib import Path
from typing import Optional

from app.commands.common import add_scenario_arguments, resolve_scenario
from app.services.reporting import format_validation, write_validation_csv
from app.services.validation import BoundFn, run_validation

logger = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("validate", help="Run the oracle checks and report pass/fail")
    add_scenario_arguments(parser)
    parser.set_defaults(handler=run)


def report_path(args: argparse.Namespace, output_path: str) -> Path:
    """``--out`` as given, else ``<output_path stem>_validation.csv`` next to output_path."""
    if args.out is not None:
        return Path(args.out)
    path = Path(output_path)
    return path.with_name(f"{path.stem}_validation.csv")


def run(args: argparse.Namespace, bound_fn: Optional[BoundFn] = None) -> int:
    """
    Run the validation suite.

    Returns:
        0 if every check passed, 1 otherwise
    """
    scenario = resolve_scenario(args)
    results = run_validation(scenario, bound_fn=bound_fn)
    print(format_validation(results))
    write_validation_csv(results, report_path(args, scenario.experiment.output_path))
    return 0 if all(result.passed for result in results) else 1
