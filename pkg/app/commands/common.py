import argparse
from typing import Any

from pydantic import ValidationError

from app.core.exceptions import ScenarioError
from app.schemas.scenario import ExperimentConfig, Scenario
from app.services.scenario import field_errors, load_scenario


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand; they override the scenario file."""
    parser.add_argument("--scenario", required=True, help="Path to a scenario file (key = value lines)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides master_seed)")
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (overrides num_trials)")
    parser.add_argument("--out", default=None, help="Output CSV path (overrides output_path)")


def apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    """Return ``scenario`` with command-line values taking precedence over the file."""
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["num_trials"] = args.trials
    if args.out is not None:
        overrides["output_path"] = args.out
    if not overrides:
        return scenario

    try:
        experiment = ExperimentConfig.model_validate({**scenario.experiment.model_dump(), **overrides})
    except ValidationError as e:
        raise ScenarioError(field_errors(e), source="command line") from e
    return scenario._replace(experiment=experiment)


def resolve_scenario(args: argparse.Namespace) -> Scenario:
    """Load the scenario file named on the command line and apply overrides."""
    return apply_overrides(load_scenario(args.scenario), args)
