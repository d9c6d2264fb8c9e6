import logging
from typing import Any, Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import DatasetUnavailableError, IdxFormatError, InvariantViolation
from app.core.seeding import child_rng
from app.core.units import dbm_to_watts, linear_to_db
from app.schemas.aircomp import SnrReport, SymbolTrace
from app.schemas.analysis import SnrBoundPoint
from app.schemas.reports import TradeoffPoint, TradeoffRow, TrainingCurveRequest
from app.schemas.scenario import (
    DatasetKind,
    ExperimentConfig,
    Policy,
    PrivacyTarget,
    Scenario,
    SymbolMode,
    SystemParams,
    TrainingConfig,
)
from app.schemas.training import Dataset, TraceRow
from app.services.aircomp import measure_snr
from app.services.analysis import tradeoff_table
from app.services.dataset_providers import get_provider
from app.services.datasets import subset
from app.services.federated import run_training

logger = logging.getLogger(__name__)

LoadedData = tuple[Dataset, Dataset, str]


def scenario_to_payload(scenario: Scenario) -> dict[str, Any]:
    """JSON-safe form of a scenario, for task messages."""
    return {name: part.model_dump(mode="json") for name, part in scenario._asdict().items()}


def scenario_from_payload(payload: dict[str, Any]) -> Scenario:
    return Scenario(
        params=SystemParams.model_validate(payload["params"]),
        target=PrivacyTarget.model_validate(payload["target"]),
        training=TrainingConfig.model_validate(payload["training"]),
        experiment=ExperimentConfig.model_validate(payload["experiment"]),
    )


def tradeoff_points(experiment: ExperimentConfig) -> list[TradeoffPoint]:
    """Sweep points ordered by (P0, I, epsilon), policies in configured order."""
    return [
        TradeoffPoint(epsilon=epsilon, num_clients=num_clients, max_tx_power_dbm=p0_dbm, policy=policy)
        for p0_dbm in sorted(set(experiment.max_tx_power_dbm_grid))
        for num_clients in sorted(set(experiment.num_clients_grid))
        for epsilon in sorted(set(experiment.epsilon_grid))
        for policy in experiment.policies
    ]


def training_requests(experiment: ExperimentConfig) -> list[TrainingCurveRequest]:
    """Training curves ordered by (I, policy)."""
    return [
        TrainingCurveRequest(num_clients=num_clients, policy=policy)
        for num_clients in sorted(set(experiment.num_clients_grid))
        for policy in experiment.policies
    ]


def load_datasets(training: TrainingConfig, master_seed: int) -> LoadedData:
    """
    Train/test data for federated runs.

    MNIST comes from the local cache, downloading it if needed. When that
    fails the run falls back to synthetic data and says so in the log; the
    returned name is written to every trace row.

    Returns:
        (train, test, dataset name)
    """
    if training.dataset is DatasetKind.MNIST:
        try:
            train, test = get_provider("mnist", directory=training.mnist_dir or settings.data_dir).load()
            train = subset(train, training.train_subset, child_rng(master_seed, "subset", "train"))
            test = subset(test, training.test_subset, child_rng(master_seed, "subset", "test"))
            return train, test, "mnist"
        except (DatasetUnavailableError, IdxFormatError) as e:
            logger.warning(f"MNIST unavailable ({e}); falling back to synthetic data")

    provider = get_provider(
        "synthetic",
        seed=master_seed,
        num_train=training.synth_samples,
        num_test=training.synth_test_samples,
        num_features=training.synth_features,
        num_classes=training.synth_classes,
    )
    train, test = provider.load()
    return train, test, provider.name


def training_curve(
    scenario: Scenario,
    request: TrainingCurveRequest,
    data: Optional[LoadedData] = None,
    symbol_sink: Optional[list[np.ndarray]] = None,
) -> list[TraceRow]:
    """Run one policy at one client count over the scenario's training setup."""
    params, target, training, experiment = scenario
    train, test, name = data or load_datasets(training, experiment.master_seed)
    return run_training(
        params.with_num_clients(request.num_clients),
        target,
        training,
        request.policy,
        train,
        test,
        experiment.master_seed,
        dataset_name=name,
        symbol_sink=symbol_sink,
    )


def collect_symbol_trace(
    scenario: Scenario, num_clients: int, policy: Policy, data: Optional[LoadedData] = None
) -> SymbolTrace:
    """Slot columns transmitted during a training run, for realized-mode SNR."""
    sink: list[np.ndarray] = []
    training_curve(scenario, TrainingCurveRequest(num_clients=num_clients, policy=policy), data, symbol_sink=sink)
    if not sink:
        raise InvariantViolation("realized symbol mode needs rounds >= 1 to record symbols")
    return SymbolTrace(columns=np.vstack(sink))


def bound_table(scenario: Scenario) -> dict[tuple[float, int, float], SnrBoundPoint]:
    """Closed-form bounds keyed by (P0 in dBm, I, epsilon), one tradeoff table per P0."""
    params, target, _, experiment = scenario
    table = {}
    for p0_dbm in sorted(set(experiment.max_tx_power_dbm_grid)):
        rows = tradeoff_table(
            params.with_max_tx_power(dbm_to_watts(p0_dbm)),
            experiment.epsilon_grid,
            experiment.num_clients_grid,
            target.delta,
            clip_threshold=target.clip_threshold,
        )
        table.update({(p0_dbm, row.num_clients, row.epsilon): row for row in rows})
    return table


def measure_point(scenario: Scenario, point: TradeoffPoint, trace: Optional[SymbolTrace] = None) -> SnrReport:
    """
    Monte Carlo SNR at one sweep point.

    The channel generator is keyed by I only, so every epsilon, P0 and policy
    at that I sees the same draws.
    """
    params, target, _, experiment = scenario
    point_params = params.with_num_clients(point.num_clients).with_max_tx_power(dbm_to_watts(point.max_tx_power_dbm))

    if experiment.symbol_mode is SymbolMode.REALIZED and trace is None:
        trace = collect_symbol_trace(scenario, point.num_clients, point.policy)

    report = measure_snr(
        point_params,
        target.with_epsilon(point.epsilon),
        point.policy,
        experiment.num_trials,
        child_rng(experiment.master_seed, "snr", point.num_clients),
        symbol_mode=experiment.symbol_mode,
        trace=trace,
    )
    logger.info(
        f"[{point.policy.value}] I={point.num_clients} eps={point.epsilon} P0={point.max_tx_power_dbm} dBm: "
        f"snr={report.snr_db:.3f} dB +- {report.snr_stderr:.3g}"
    )
    return report


def tradeoff_row(point: TradeoffPoint, bounds: SnrBoundPoint, report: SnrReport) -> TradeoffRow:
    """Join a point's closed-form bounds with its measured SNR."""
    return TradeoffRow(
        epsilon=point.epsilon,
        delta=bounds.delta,
        num_clients=point.num_clients,
        max_tx_power_dbm=point.max_tx_power_dbm,
        g_th=bounds.g_th,
        exact_bound=bounds.exact_bound,
        exact_bound_db=bounds.exact_bound_db,
        approx_bound=bounds.approx_bound,
        approx_bound_db=bounds.approx_bound_db,
        expected_rho=bounds.expected_rho,
        snr=report.snr,
        snr_db=linear_to_db(report.snr),
        snr_stderr=report.snr_stderr,
        num_trials=report.num_trials,
        policy=point.policy,
        symbol_mode=report.symbol_mode,
    )
