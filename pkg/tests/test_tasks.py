import numpy as np

from app.schemas.reports import TradeoffPoint, TrainingCurveRequest
from app.schemas.scenario import Policy, SymbolMode
from app.services.analysis import snr_bound, tradeoff_table
from app.services.executor import SweepExecutor
from app.services.experiments import bound_table, scenario_from_payload, scenario_to_payload, tradeoff_points
from app.services.scenario import parse_scenario
from app.tasks import measure_snr_point, train_curve

SWEEP = {
    "epsilon_grid": "0.01, 0.5",
    "num_clients_grid": "5, 10",
    "num_trials": "1000",
    "policies": "dp_star_star, dp_star",
}
TRAINING = {
    "dataset": "synthetic",
    "synth_samples": "120",
    "synth_features": "4",
    "synth_test_samples": "40",
    "hidden_layers": "4",
    "batch_size": "8",
    "local_epochs": "1",
    "rounds": "2",
    "num_clients_grid": "3",
    "policies": "dp_star_star",
}


def test_payload_round_trip():
    scenario = parse_scenario(SWEEP)
    assert scenario_from_payload(scenario_to_payload(scenario)) == scenario


def test_points_cover_the_grid():
    points = tradeoff_points(parse_scenario(SWEEP).experiment)
    assert len(points) == 2 * 2 * 2
    assert points[0] == TradeoffPoint(epsilon=0.01, num_clients=5, max_tx_power_dbm=10.0, policy=Policy.DP_STAR_STAR)


def test_bound_table_covers_every_point():
    scenario = parse_scenario({**SWEEP, "max_tx_power_dbm_grid": "0, 10"})
    bounds = bound_table(scenario)
    points = tradeoff_points(scenario.experiment)
    assert {(p.max_tx_power_dbm, p.num_clients, p.epsilon) for p in points} == set(bounds)
    assert bounds[(0.0, 5, 0.5)].exact_bound < bounds[(10.0, 5, 0.5)].exact_bound


def test_rows_carry_tradeoff_table_bounds():
    scenario = parse_scenario(SWEEP)
    params, target, _, experiment = scenario
    table = tradeoff_table(
        params,
        experiment.epsilon_grid,
        experiment.num_clients_grid,
        target.delta,
        clip_threshold=target.clip_threshold,
    )
    rows = SweepExecutor(kind="local").tradeoff(scenario)
    expected = {(bounds.num_clients, bounds.epsilon): bounds for bounds in table}
    for row in rows:
        bounds = expected[(row.num_clients, row.epsilon)]
        assert (row.g_th, row.exact_bound, row.approx_bound, row.expected_rho) == (
            bounds.g_th,
            bounds.exact_bound,
            bounds.approx_bound,
            bounds.expected_rho,
        )


def test_celery_matches_local_tradeoff(celery_eager):
    scenario = parse_scenario(SWEEP)
    local = SweepExecutor(kind="local").tradeoff(scenario)
    distributed = SweepExecutor(kind="celery").tradeoff(scenario)
    assert local == distributed


def test_celery_matches_local_training(celery_eager):
    scenario = parse_scenario(TRAINING)
    assert SweepExecutor(kind="local").training(scenario) == SweepExecutor(kind="celery").training(scenario)


def test_measure_snr_point_task(celery_eager):
    scenario = parse_scenario(SWEEP)
    point = TradeoffPoint(epsilon=0.5, num_clients=5, max_tx_power_dbm=10.0, policy=Policy.DP_STAR_STAR)
    report = measure_snr_point.delay(scenario_to_payload(scenario), point.model_dump(mode="json")).get()
    assert report["policy"] == "dp_star_star"
    assert report["num_clients"] == 5
    assert report["num_trials"] == 1000
    bound = snr_bound(scenario.params, scenario.target.with_epsilon(0.5))
    assert report["snr"] <= bound + 3 * report["snr_stderr"]


def test_train_curve_task(celery_eager):
    scenario = parse_scenario(TRAINING)
    request = TrainingCurveRequest(num_clients=3, policy=Policy.CONVENTIONAL)
    rows = train_curve.delay(scenario_to_payload(scenario), request.model_dump(mode="json")).get()
    assert [row["round"] for row in rows] == [1, 2]
    assert all(row["policy"] == "conventional" for row in rows)


def test_realized_mode_uses_training_symbols():
    scenario = parse_scenario({**TRAINING, "symbol_mode": "realized", "epsilon_grid": "0.5", "num_trials": "500"})
    rows = SweepExecutor(kind="local").tradeoff(scenario)
    assert len(rows) == 1
    assert rows[0].symbol_mode is SymbolMode.REALIZED
    assert np.isfinite(rows[0].snr)
    assert rows[0].snr <= rows[0].exact_bound
