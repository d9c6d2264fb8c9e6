import numpy as np
import pytest

from app.core.exceptions import InvariantViolation, ScenarioError, TrainingDivergedError
from app.core.seeding import child_rng
from app.schemas.scenario import ClipMode, Policy, PrivacyTarget, TrainingConfig
from app.services.channel import draw_channel, draw_channels
from app.services.datasets import partition_iid, synth_train_test
from app.services.federated import (
    centralized_train,
    evaluate,
    fed_round,
    local_train,
    loss,
    model_for,
    run_training,
)
from app.services.privacy import dp_rho_cap
from app.services.validation import fedavg_deviation

SMALL = TrainingConfig(hidden_layers=(8,), batch_size=10, local_steps_per_round=2, rounds=3, dataset="synthetic")


@pytest.fixture
def data(rng):
    return synth_train_test(rng, 300, 100, 5, 3)


@pytest.fixture
def clients(data, rng):
    return partition_iid(data[0], 5, rng)


def test_local_train_reduces_loss(data, rng):
    train, _ = data
    start = model_for(train, SMALL, rng)
    update = local_train(start, train, SMALL, rng, epochs=5)
    assert loss(start.with_theta(start.theta + update), train) < loss(start, train)


def test_local_train_leaves_input_untouched(data, rng):
    train, _ = data
    start = model_for(train, SMALL, rng)
    before = start.theta.copy()
    local_train(start, train, SMALL, rng)
    np.testing.assert_array_equal(start.theta, before)


def test_divergence_is_reported(data, rng):
    train, _ = data
    start = model_for(train, SMALL, rng)
    bad = train.model_copy(update={"features": np.full_like(train.features, np.inf)})
    with pytest.raises(TrainingDivergedError, match="client 3"):
        local_train(start, bad, SMALL, rng, client=3)


def test_centralized_training_learns(data, rng):
    train, test = data
    trained = centralized_train(model_for(train, SMALL, rng), train, SMALL, rng, epochs=20)
    assert evaluate(trained, test) > 0.6


def test_noiseless_round_matches_fedavg(params):
    assert fedavg_deviation(params, master_seed=0) <= 1e-8


def test_round_respects_dp_and_power(params, target, clients, data, rng):
    model = model_for(data[0], SMALL, rng)
    dp_target = target.model_copy(update={"clip_mode": ClipMode.PER_COORDINATE})
    _, stats = fed_round(model, clients, params, dp_target, Policy.DP_STAR_STAR, draw_channel(rng, params), rng, SMALL)
    assert stats.num_slots == model.dimension
    assert stats.clip_bound_ok
    assert stats.max_symbol <= target.clip_threshold
    assert np.all(stats.rho <= dp_rho_cap(params, target) * (1 + 1e-12))
    assert stats.epsilon_worst_slot <= target.epsilon * (1 + 1e-9)
    assert stats.tx_power_max.max() <= params.max_tx_power * (1 + 1e-9)


def test_per_slot_fading_round(params, target, clients, data, rng):
    model = model_for(data[0], SMALL, rng)
    draw = draw_channels(rng, params, model.dimension)
    _, stats = fed_round(model, clients, params, target, Policy.CONVENTIONAL, draw, rng, SMALL)
    assert stats.rho.shape == (model.dimension,)


def test_client_count_must_match(params, target, clients, data, rng):
    model = model_for(data[0], SMALL, rng)
    with pytest.raises(InvariantViolation):
        fed_round(model, clients[:3], params, target, Policy.CONVENTIONAL, draw_channel(rng, params), rng, SMALL)


def test_run_training_trace(params, target, data):
    train, test = data
    rows = run_training(params, target, SMALL, Policy.DP_STAR_STAR, train, test, master_seed=5)
    assert [row.round for row in rows] == [1, 2, 3]
    assert [row.releases for row in rows] == [rows[0].releases * k for k in (1, 2, 3)]
    assert all(row.epsilon_achieved <= target.epsilon * (1 + 1e-9) for row in rows)
    assert all(row.dataset == "synthetic" for row in rows)


def test_run_training_is_reproducible(params, target, data):
    train, test = data
    first = run_training(params, target, SMALL, Policy.CONVENTIONAL, train, test, master_seed=5)
    second = run_training(params, target, SMALL, Policy.CONVENTIONAL, train, test, master_seed=5)
    assert first == second


def test_conventional_exceeds_privacy_target(params, target, data):
    train, test = data
    rows = run_training(params, target, SMALL, Policy.CONVENTIONAL, train, test, master_seed=5)
    assert rows[-1].epsilon_achieved > target.epsilon


def test_zero_rounds_gives_empty_trace(params, target, data):
    config = SMALL.model_copy(update={"rounds": 0})
    assert run_training(params, target, config, Policy.CONVENTIONAL, *data, master_seed=1) == []


def test_batch_larger_than_client_share(params, target, data):
    config = SMALL.model_copy(update={"batch_size": 500})
    with pytest.raises(ScenarioError, match="batch_size") as excinfo:
        run_training(params, target, config, Policy.CONVENTIONAL, *data, master_seed=1)
    assert [field for field, _ in excinfo.value.errors] == ["batch_size"]


@pytest.mark.slow
def test_designed_policy_trend(params):
    """More clients help the DP policy; the non-private policy is at least as accurate."""
    target = PrivacyTarget(epsilon=0.01, delta=0.1, clip_threshold=1e-3, clip_mode=ClipMode.PER_COORDINATE)
    config = TrainingConfig(
        hidden_layers=(), learning_rate=0.02, batch_size=32, local_steps_per_round=1, rounds=40, dataset="synthetic"
    )
    train, test = synth_train_test(child_rng(2021, "trend"), 6000, 2000, 20, 3)

    final = {}
    for num_clients in (5, 100):
        for policy in (Policy.DP_STAR_STAR, Policy.CONVENTIONAL):
            rows = run_training(
                params.with_num_clients(num_clients), target, config, policy, train, test, master_seed=2021
            )
            final[policy, num_clients] = rows[-1]

    assert final[Policy.DP_STAR_STAR, 100].test_accuracy > final[Policy.DP_STAR_STAR, 5].test_accuracy
    for num_clients in (5, 100):
        conventional = final[Policy.CONVENTIONAL, num_clients]
        assert conventional.test_accuracy >= final[Policy.DP_STAR_STAR, num_clients].test_accuracy
        assert conventional.epsilon_achieved > target.epsilon
