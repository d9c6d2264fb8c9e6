import logging
from typing import Any, Dict, List

from app.celery_app import celery_app
from app.schemas.reports import TradeoffPoint, TrainingCurveRequest
from app.services.experiments import measure_point, scenario_from_payload, training_curve

logger = logging.getLogger(__name__)


@celery_app.task(name="app.tasks.measure_snr_point")
def measure_snr_point(scenario: Dict[str, Any], point: Dict[str, Any]) -> Dict[str, Any]:
    """
    Celery task measuring the SNR at one tradeoff point.

    Seeds are derived from the scenario's master seed and the point key, so
    the report is the same whichever worker runs it. Closed-form bounds are
    joined in by the caller.
    """
    sweep_point = TradeoffPoint.model_validate(point)
    logger.info(f"Starting SNR point {sweep_point.model_dump(mode='json')}")
    report = measure_point(scenario_from_payload(scenario), sweep_point)
    return report.model_dump(mode="json")


@celery_app.task(name="app.tasks.train_curve")
def train_curve(scenario: Dict[str, Any], request: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Celery task running one federated training curve."""
    curve = TrainingCurveRequest.model_validate(request)
    logger.info(f"Starting training curve {curve.policy.value} I={curve.num_clients}")
    rows = training_curve(scenario_from_payload(scenario), curve)
    return [row.model_dump(mode="json") for row in rows]
