import argparse

import pytest

from app.commands import validate
from app.services.analysis import snr_bound
from app.services.scenario import parse_scenario
from app.services.validation import (
    check_approximation,
    check_bound_dominance,
    check_dp_constraints,
    check_epsilon_round_trip,
    check_expected_rho,
    check_gain_distribution,
    check_noise_power,
    run_validation,
)
from tests.conftest import SCENARIO_DIR

QUICK = {"epsilon_grid": "0.01, 0.1, 0.5, 0.95", "num_clients_grid": "5, 100", "num_trials": "5000"}


def halved_bound(params, target):
    return 0.5 * snr_bound(params, target)


@pytest.fixture
def quick_scenario():
    return parse_scenario(QUICK)


def test_gain_distribution(params):
    assert check_gain_distribution(params, master_seed=1).passed


def test_noise_power(params):
    assert check_noise_power(params, master_seed=1).passed
    noiseless = params.model_copy(update={"noise_enabled": False})
    result = check_noise_power(noiseless, master_seed=1)
    assert result.passed and result.value == 0.0


def test_expected_rho_cross_check(params, target):
    result = check_expected_rho(params, target, master_seed=1, draws=200_000)
    assert result.passed, result.detail


def test_bound_dominance(quick_scenario):
    assert check_bound_dominance(quick_scenario).passed


@pytest.mark.parametrize("seed", ["1", "2", "3", "20210601"])
def test_bound_dominance_holds_when_few_draws_are_channel_limited(seed):
    scenario = parse_scenario({**QUICK, "epsilon_grid": "0.01", "num_clients_grid": "5", "master_seed": seed})
    result = check_bound_dominance(scenario)
    assert result.passed, result.detail


def test_tampered_bound_fails_dominance(quick_scenario):
    result = check_bound_dominance(quick_scenario, bound_fn=halved_bound)
    assert not result.passed
    assert "bound" in result.detail


def test_approximation_dominates(quick_scenario):
    assert check_approximation(quick_scenario).passed


def test_dp_constraints(params, target):
    result = check_dp_constraints(params, target, master_seed=1)
    assert result.passed, result.detail
    assert result.value <= 1.0 + 1e-9


def test_epsilon_round_trip(quick_scenario):
    assert check_epsilon_round_trip(quick_scenario).passed


@pytest.mark.slow
def test_full_suite_passes_on_evaluation_settings():
    scenario = parse_scenario({**QUICK, "num_trials": "100000"})
    results = run_validation(scenario)
    assert [result.check for result in results if not result.passed] == []


def test_suite_reports_tampered_bound(quick_scenario):
    results = {result.check: result for result in run_validation(quick_scenario, bound_fn=halved_bound)}
    assert not results["bound_dominance"].passed
    assert results["gradient_check"].passed
    assert results["fedavg_equivalence"].passed


def test_validate_command_exit_code_on_failure(tmp_path):
    args = argparse.Namespace(
        scenario=str(SCENARIO_DIR / "defaults.env"), seed=None, trials=2000, out=str(tmp_path / "report.csv")
    )
    assert validate.run(args, bound_fn=halved_bound) == 1
    assert (tmp_path / "report.csv").exists()


def test_failing_check_does_not_abort_suite(quick_scenario):
    def broken(params, target):
        raise ValueError("broken bound")

    results = {result.check: result for result in run_validation(quick_scenario, bound_fn=broken)}
    assert "broken bound" in results["bound_dominance"].detail
    assert results["epsilon_round_trip"].passed
