import logging
from typing import Literal, Optional

from app.core.config import settings
from app.schemas.aircomp import SnrReport, SymbolTrace
from app.schemas.reports import TradeoffPoint, TradeoffRow
from app.schemas.scenario import Policy, Scenario, SymbolMode
from app.schemas.training import TraceRow
from app.services.experiments import (
    bound_table,
    collect_symbol_trace,
    load_datasets,
    measure_point,
    scenario_to_payload,
    tradeoff_points,
    tradeoff_row,
    training_curve,
    training_requests,
)

logger = logging.getLogger(__name__)

ExecutorKind = Literal["local", "celery"]


class SweepExecutor:
    """
    Runs sweep points in-process or as Celery tasks.

    Both paths derive every seed from the master seed and the point key, so
    they produce identical rows in identical order.
    """

    def __init__(self, kind: Optional[ExecutorKind] = None, timeout_s: Optional[float] = None):
        self.kind: ExecutorKind = kind or settings.executor
        self.timeout_s = timeout_s or settings.celery_task_timeout_s

    def tradeoff(self, scenario: Scenario) -> list[TradeoffRow]:
        """One row per (P0, I, epsilon, policy) of the scenario's grids."""
        points = tradeoff_points(scenario.experiment)
        logger.info(f"Tradeoff sweep: {len(points)} points on the {self.kind} executor")

        if self.kind == "celery":
            from app.tasks import measure_snr_point

            payload = scenario_to_payload(scenario)
            pending = [measure_snr_point.delay(payload, point.model_dump(mode="json")) for point in points]
            reports = [SnrReport.model_validate(result.get(timeout=self.timeout_s)) for result in pending]
        else:
            reports = self._measure_locally(scenario, points)

        bounds = bound_table(scenario)
        return [
            tradeoff_row(point, bounds[(point.max_tx_power_dbm, point.num_clients, point.epsilon)], report)
            for point, report in zip(points, reports)
        ]

    def _measure_locally(self, scenario: Scenario, points: list[TradeoffPoint]) -> list[SnrReport]:
        traces: dict[tuple[int, Policy], SymbolTrace] = {}
        data = None
        reports = []
        for point in points:
            trace = None
            if scenario.experiment.symbol_mode is SymbolMode.REALIZED:
                key = (point.num_clients, point.policy)
                if key not in traces:
                    data = data or load_datasets(scenario.training, scenario.experiment.master_seed)
                    traces[key] = collect_symbol_trace(scenario, point.num_clients, point.policy, data)
                trace = traces[key]
            reports.append(measure_point(scenario, point, trace))
        return reports

    def training(self, scenario: Scenario) -> list[TraceRow]:
        """Concatenated traces of every (I, policy) curve."""
        requests = training_requests(scenario.experiment)
        logger.info(f"Training sweep: {len(requests)} curves on the {self.kind} executor")

        if self.kind == "celery":
            from app.tasks import train_curve

            payload = scenario_to_payload(scenario)
            pending = [train_curve.delay(payload, request.model_dump(mode="json")) for request in requests]
            return [TraceRow.model_validate(row) for result in pending for row in result.get(timeout=self.timeout_s)]

        if scenario.training.rounds == 0:
            return []
        data = load_datasets(scenario.training, scenario.experiment.master_seed)
        return [row for request in requests for row in training_curve(scenario, request, data)]
