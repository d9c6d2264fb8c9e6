import logging
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.exceptions import ScenarioError
from app.core.units import db_to_linear, dbm_to_watts
from app.schemas.scenario import ExperimentConfig, PrivacyTarget, Scenario, SystemParams, TrainingConfig
from app.schemas.scenario_file import ScenarioFile

logger = logging.getLogger(__name__)


def field_errors(exc: ValidationError) -> list[tuple[str, str]]:
    return [(".".join(str(part) for part in err["loc"]) or "<root>", err["msg"]) for err in exc.errors()]


def _validated(model: Any, data: Mapping[str, Any], source: str) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(field_errors(e), source=source) from e


def build_scenario(raw: ScenarioFile, source: str = "scenario") -> Scenario:
    """
    Normalize a raw scenario into SI-unit domain types.

    Args:
        raw: Parsed scenario file
        source: Name used in error messages

    Returns:
        Validated scenario

    Raises:
        ScenarioError: If a derived quantity violates an invariant
    """
    distances = raw.distance_m
    if len(distances) == 1:
        distances = distances * raw.num_clients

    params = _validated(
        SystemParams,
        {
            "num_clients": raw.num_clients,
            "antenna_gain_product": db_to_linear(raw.antenna_gain_dbi),
            "ref_path_loss": db_to_linear(raw.ref_path_loss_db),
            "path_loss_exponent": raw.path_loss_exponent,
            "noise_power": dbm_to_watts(raw.noise_power_dbm),
            "max_tx_power": dbm_to_watts(raw.max_tx_power_dbm),
            "carrier_freq": raw.carrier_freq_hz,
            "distances": distances,
            "noise_enabled": raw.noise,
            "fading": raw.fading,
        },
        source,
    )
    target = _validated(
        PrivacyTarget,
        {
            "epsilon": raw.epsilon,
            "delta": raw.delta,
            "clip_threshold": raw.clip_threshold,
            "clip_mode": raw.clipping,
        },
        source,
    )
    training = _validated(
        TrainingConfig,
        {
            "hidden_layers": raw.hidden_layers,
            "activation": raw.activation,
            "learning_rate": raw.learning_rate,
            "adam_beta1": raw.adam_beta1,
            "adam_beta2": raw.adam_beta2,
            "adam_epsilon": raw.adam_epsilon,
            "batch_size": raw.batch_size,
            "local_steps_per_round": raw.local_epochs,
            "rounds": raw.rounds,
            "client_weights": raw.client_weights,
            "dataset": raw.dataset,
            "mnist_dir": raw.mnist_dir,
            "train_subset": raw.train_subset,
            "test_subset": raw.test_subset,
            "synth_samples": raw.synth_samples,
            "synth_features": raw.synth_features,
            "synth_classes": raw.synth_classes,
            "synth_test_samples": raw.synth_test_samples,
        },
        source,
    )
    if training.client_weights is not None and len(training.client_weights) != params.num_clients:
        raise ScenarioError(
            [("client_weights", f"expected {params.num_clients} weights, got {len(training.client_weights)}")],
            source=source,
        )
    experiment = _validated(
        ExperimentConfig,
        {
            "epsilon_grid": raw.epsilon_grid,
            "num_clients_grid": raw.num_clients_grid,
            "max_tx_power_dbm_grid": raw.max_tx_power_dbm_grid,
            "num_trials": raw.num_trials,
            "master_seed": raw.master_seed,
            "output_path": raw.output_path,
            "policies": raw.policies,
            "symbol_mode": raw.symbol_mode,
        },
        source,
    )
    if not params.uniform_distance and set(experiment.num_clients_grid) != {params.num_clients}:
        raise ScenarioError(
            [
                (
                    "num_clients_grid",
                    f"must be {params.num_clients} (num_clients) when distance_m lists different distances",
                )
            ],
            source=source,
        )
    return Scenario(params, target, training, experiment)


def parse_scenario(values: Mapping[str, Any], source: str = "scenario") -> Scenario:
    """Validate key-value pairs (as read from a scenario file) into a Scenario."""
    cleaned = {key.strip().lower(): value for key, value in values.items() if value is not None}
    raw = _validated(ScenarioFile, cleaned, source)
    return build_scenario(raw, source=source)


def load_scenario(path: str | Path) -> Scenario:
    """
    Load and validate a scenario file.

    The file is a dotenv-style ``key = value`` list; dB/dBm keys are converted
    to linear ratios and watts.

    Args:
        path: Scenario file path

    Returns:
        Scenario (params, target, training, experiment)

    Raises:
        ScenarioError: On missing file, parse failure, unknown key or invariant violation
    """
    path = Path(path)
    if not path.is_file():
        raise ScenarioError([("path", f"scenario file not found: {path}")], source=str(path))

    try:
        values = dotenv_values(path, interpolate=False)
    except (OSError, UnicodeDecodeError) as e:
        raise ScenarioError([("path", f"cannot read scenario: {e}")], source=str(path)) from e

    # A line without '=' comes back with a None value
    bare = [key for key, value in values.items() if value is None]
    if bare:
        raise ScenarioError([(key, "line has no '=' assignment") for key in bare], source=str(path))

    scenario = parse_scenario(values, source=str(path))
    logger.info(
        f"Loaded scenario {path}: I={scenario.params.num_clients}, eps={scenario.target.epsilon}, "
        f"delta={scenario.target.delta}, S={scenario.target.clip_threshold}, "
        f"P0={scenario.params.max_tx_power} W, sigma_n2={scenario.params.noise_power} W"
    )
    return scenario
