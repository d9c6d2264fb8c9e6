"""Oracle checks run by the ``validate`` command.

Every check returns a CheckResult; a check that raises is reported as failed
rather than aborting the suite.
"""

import logging
from typing import Callable, Optional

import numpy as np
from scipy import stats

from app.core.config import settings
from app.core.exceptions import AirCompError
from app.core.seeding import child_rng
from app.schemas.reports import CheckResult
from app.schemas.scenario import Activation, ClipMode, Policy, PrivacyTarget, Scenario, SystemParams, TrainingConfig
from app.services.aircomp import empirical_noise_power, measure_snr
from app.services.analysis import expected_rho_star_star, saturated_snr_stderr, snr_bound, snr_bound_approx
from app.services.channel import draw_channel, draw_channels, sample_effective_gains
from app.services.datasets import partition_iid, synth_dataset
from app.services.federated import client_weights, fed_round, local_train, model_for
from app.services.model import MLP, init_params
from app.services.privacy import (
    dp_rho_cap,
    epsilon_achieved,
    rho_conventional,
    rho_star,
    rho_star_star,
    tx_power_per_client,
)

logger = logging.getLogger(__name__)

BoundFn = Callable[[SystemParams, PrivacyTarget], float]

KS_SAMPLES = 100_000
KS_SIGNIFICANCE = 0.01
RHO_MC_DRAWS = 1_000_000
RHO_MC_TOLERANCE = 0.01
DP_SUITE_PAIRS = 10_000
ROUND_TRIP_TOLERANCE = 1e-9
GRADIENT_TOLERANCE = 1e-4
FEDAVG_TOLERANCE = 1e-8
FEDAVG_ROUNDS = 10
NOISE_SAMPLES = 100_000
NOISE_TOLERANCE = 0.02
RELATIVE_SLACK = 1e-12


def check_gain_distribution(params: SystemParams, master_seed: int, samples: int = KS_SAMPLES) -> CheckResult:
    """KS test of the minimum effective gain against Exponential(sum r^alpha)."""
    gains = sample_effective_gains(child_rng(master_seed, "validate", "ks"), params, samples)
    result = stats.kstest(gains, "expon", args=(0.0, 1.0 / params.sum_r_alpha))
    return CheckResult(
        check="gain_distribution_ks",
        passed=bool(result.pvalue >= KS_SIGNIFICANCE),
        value=float(result.pvalue),
        threshold=KS_SIGNIFICANCE,
        detail=f"I={params.num_clients}, {samples} draws, statistic={result.statistic:.4g}",
    )


def check_expected_rho(
    params: SystemParams, target: PrivacyTarget, master_seed: int, draws: int = RHO_MC_DRAWS
) -> CheckResult:
    """Monte Carlo mean of rho** against its closed form."""
    rng = child_rng(master_seed, "validate", "expected_rho")
    block = settings.mc_block_size
    total = 0.0
    for start in range(0, draws, block):
        size = min(block, draws - start)
        total += float(rho_star_star(params, target, draw_channels(rng, params, size)).rho.sum())
    measured = total / draws
    expected = expected_rho_star_star(params, target)
    error = abs(measured - expected) / expected
    return CheckResult(
        check="expected_rho_mc",
        passed=error < RHO_MC_TOLERANCE,
        value=error,
        threshold=RHO_MC_TOLERANCE,
        detail=f"measured={measured:.6g}, closed form={expected:.6g}",
    )


def check_bound_dominance(scenario: Scenario, bound_fn: BoundFn = snr_bound) -> CheckResult:
    """
    Measured SNR under rho** (saturated symbols) never exceeds the bound by more than 3 standard errors.

    The standard error is the larger of the sample one and the closed-form one.

    Also checks that the measured SNR is non-decreasing in epsilon at every I.
    """
    params, target, _, experiment = scenario
    worst_margin = -np.inf
    violations = []
    non_monotone = []
    for num_clients in sorted(set(experiment.num_clients_grid)):
        point_params = params.with_num_clients(num_clients)
        previous = -np.inf
        for epsilon in sorted(set(experiment.epsilon_grid)):
            point_target = target.with_epsilon(epsilon)
            report = measure_snr(
                point_params,
                point_target,
                Policy.DP_STAR_STAR,
                experiment.num_trials,
                child_rng(experiment.master_seed, "snr", num_clients),
            )
            bound = bound_fn(point_params, point_target)
            stderr = max(report.snr_stderr, saturated_snr_stderr(point_params, point_target, experiment.num_trials))
            margin = (report.snr - bound - 3.0 * stderr) / bound
            worst_margin = max(worst_margin, margin)
            if margin > 0:
                violations.append(f"I={num_clients} eps={epsilon}: snr={report.snr:.6g} > bound={bound:.6g}")
            if report.snr < previous:
                non_monotone.append(f"I={num_clients} eps={epsilon}")
            previous = report.snr

    detail = "; ".join(violations + [f"not monotone at {where}" for where in non_monotone])
    return CheckResult(
        check="bound_dominance",
        passed=not violations and not non_monotone,
        value=float(worst_margin),
        threshold=0.0,
        detail=detail or f"{experiment.num_trials} trials per point",
    )


def check_approximation(scenario: Scenario, bound_fn: BoundFn = snr_bound) -> CheckResult:
    """The exact bound never exceeds its first-order approximation."""
    params, target, _, experiment = scenario
    worst_gap = 0.0
    for num_clients in sorted(set(experiment.num_clients_grid)):
        for epsilon in sorted(set(experiment.epsilon_grid)):
            point_target = target.with_epsilon(epsilon)
            exact = bound_fn(params.with_num_clients(num_clients), point_target)
            approx = snr_bound_approx(num_clients, epsilon, point_target.delta)
            worst_gap = max(worst_gap, (exact - approx) / approx)
    return CheckResult(
        check="approx_dominates_exact",
        passed=worst_gap <= RELATIVE_SLACK,
        value=worst_gap,
        threshold=RELATIVE_SLACK,
        detail="largest (exact - approx) / approx",
    )


def check_dp_constraints(
    params: SystemParams, target: PrivacyTarget, master_seed: int, pairs: int = DP_SUITE_PAIRS
) -> CheckResult:
    """
    Random (draw, clipped symbols) pairs satisfy the policy ordering and power limits.

    rho** <= rho* <= rho_conv, rho** <= DP cap and every client's transmit
    power under rho* and rho** stays within P0.
    """
    rng = child_rng(master_seed, "validate", "dp_suite")
    draw = draw_channels(rng, params, pairs)
    S = target.clip_threshold
    symbols = rng.uniform(-S, S, size=(pairs, params.num_clients))

    dp2 = rho_star_star(params, target, draw).rho
    dp1 = rho_star(params, target, draw, symbols).rho
    conv = rho_conventional(params, draw, symbols).rho
    cap = dp_rho_cap(params, target)
    slack = 1.0 + RELATIVE_SLACK

    failures = []
    if np.any(dp2 > dp1 * slack):
        failures.append(f"rho** > rho* in {int(np.count_nonzero(dp2 > dp1 * slack))} draws")
    if np.any(dp1 > conv * slack):
        failures.append(f"rho* > rho_conv in {int(np.count_nonzero(dp1 > conv * slack))} draws")
    if np.any(dp2 > cap * slack):
        failures.append("rho** above the DP cap")

    worst_power = 0.0
    for name, rho in (("rho*", dp1), ("rho**", dp2)):
        power = tx_power_per_client(rho, draw, symbols, params).max()
        worst_power = max(worst_power, float(power) / params.max_tx_power)
        if power > params.max_tx_power * slack:
            failures.append(f"transmit power {power:.6g} W above P0 under {name}")

    return CheckResult(
        check="dp_constraint_suite",
        passed=not failures,
        value=worst_power,
        threshold=1.0,
        detail="; ".join(failures) or f"{pairs} pairs, worst power / P0 shown",
    )


def check_epsilon_round_trip(scenario: Scenario) -> CheckResult:
    """epsilon_achieved(dp_rho_cap(eps)) gives eps back."""
    params, target, _, experiment = scenario
    worst = 0.0
    for epsilon in sorted(set(experiment.epsilon_grid) | {target.epsilon}):
        point_target = target.with_epsilon(epsilon)
        recovered = epsilon_achieved(
            params, dp_rho_cap(params, point_target), point_target.clip_threshold, point_target.delta
        )
        worst = max(worst, abs(recovered - epsilon) / epsilon)
    return CheckResult(
        check="epsilon_round_trip",
        passed=worst <= ROUND_TRIP_TOLERANCE,
        value=worst,
        threshold=ROUND_TRIP_TOLERANCE,
    )


def check_noise_power(params: SystemParams, master_seed: int, samples: int = NOISE_SAMPLES) -> CheckResult:
    """Sample mean of |n_0|^2 matches sigma_n^2 (or is zero with noise off)."""
    measured = empirical_noise_power(params, child_rng(master_seed, "validate", "noise"), samples)
    if not params.noise_enabled:
        return CheckResult(check="noise_power", passed=measured == 0.0, value=measured, threshold=0.0)
    error = abs(measured - params.noise_power) / params.noise_power
    return CheckResult(
        check="noise_power",
        passed=error < NOISE_TOLERANCE,
        value=error,
        threshold=NOISE_TOLERANCE,
        detail=f"measured={measured:.6g} W, configured={params.noise_power:.6g} W",
    )


def gradient_error(master_seed: int, step: float = 1e-5) -> float:
    """Largest relative mismatch between backprop and central differences on a 20-parameter tanh net."""
    rng = child_rng(master_seed, "validate", "gradient")
    model_params = init_params((3, 3, 2), rng, Activation.TANH)
    theta = model_params.theta + 0.1 * rng.standard_normal(model_params.dimension)
    x = rng.standard_normal((8, 3))
    y = rng.integers(0, 2, size=8)
    model = MLP.for_params(model_params)

    _, grad = model.loss_and_grad(theta, x, y)
    numeric = np.empty_like(theta)
    for k in range(theta.size):
        bump = np.zeros_like(theta)
        bump[k] = step
        plus, _ = model.loss_and_grad(theta + bump, x, y)
        minus, _ = model.loss_and_grad(theta - bump, x, y)
        numeric[k] = (plus - minus) / (2.0 * step)
    return float(np.linalg.norm(grad - numeric) / max(np.linalg.norm(grad), np.linalg.norm(numeric), 1e-12))


def check_gradients(master_seed: int) -> CheckResult:
    error = gradient_error(master_seed)
    return CheckResult(
        check="gradient_check",
        passed=error < GRADIENT_TOLERANCE,
        value=error,
        threshold=GRADIENT_TOLERANCE,
    )


def fedavg_deviation(params: SystemParams, master_seed: int, rounds: int = FEDAVG_ROUNDS) -> float:
    """
    Largest per-coordinate gap between a noiseless, unclipped AirComp run and plain FedAvg.

    Both runs share the local-training generators, so any gap comes from the
    channel path alone.
    """
    num_clients = 4 if params.uniform_distance else params.num_clients
    noiseless = params.with_num_clients(num_clients).model_copy(update={"noise_enabled": False})
    target = PrivacyTarget(epsilon=1.0, delta=0.1, clip_threshold=1e6, clip_mode=ClipMode.FLAT)
    config = TrainingConfig(hidden_layers=(8,), batch_size=10, local_steps_per_round=2, rounds=rounds)
    data_rng = child_rng(master_seed, "validate", "fedavg", "data")
    clients = partition_iid(synth_dataset(data_rng, 50 * num_clients, 5, 3), num_clients, data_rng)

    start = model_for(clients[0], config, child_rng(master_seed, "validate", "fedavg", "init"))
    weights = client_weights(clients, config)
    over_air = start
    reference = start.theta.copy()
    worst = 0.0
    for t in range(rounds):
        draw = draw_channel(child_rng(master_seed, "validate", "fedavg", "channel", t), noiseless)
        round_key = ("validate", "fedavg", "round", t)
        over_air, _ = fed_round(
            over_air, clients, noiseless, target, Policy.CONVENTIONAL, draw, child_rng(master_seed, *round_key), config
        )

        client_rngs = child_rng(master_seed, *round_key).spawn(num_clients)
        current = start.with_theta(reference)
        reference = reference + sum(
            (w / weights.sum()) * local_train(current, client, config, client_rng)
            for w, client, client_rng in zip(weights, clients, client_rngs)
        )
        worst = max(worst, float(np.max(np.abs(over_air.theta - reference))))
    return worst


def check_fedavg(params: SystemParams, master_seed: int) -> CheckResult:
    deviation = fedavg_deviation(params, master_seed)
    return CheckResult(
        check="fedavg_equivalence",
        passed=deviation <= FEDAVG_TOLERANCE,
        value=deviation,
        threshold=FEDAVG_TOLERANCE,
        detail=f"{FEDAVG_ROUNDS} noiseless rounds",
    )


def _guarded(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        result = check()
    except (AirCompError, ValueError) as e:
        logger.exception(f"Check {name} raised")
        return CheckResult(check=name, passed=False, detail=f"{type(e).__name__}: {e}")
    level = logging.INFO if result.passed else logging.WARNING
    logger.log(level, f"Check {result.check}: {'passed' if result.passed else 'FAILED'} (value={result.value})")
    return result


def run_validation(scenario: Scenario, bound_fn: Optional[BoundFn] = None) -> list[CheckResult]:
    """
    Run the full oracle suite on a scenario.

    Args:
        scenario: Loaded scenario; its grids and trial count drive the SNR checks
        bound_fn: SNR bound under test (the closed form by default)

    Returns:
        One CheckResult per check, in a fixed order
    """
    params, target, _, experiment = scenario
    seed = experiment.master_seed
    bound = bound_fn or snr_bound
    checks: list[tuple[str, Callable[[], CheckResult]]] = [
        ("gain_distribution_ks", lambda: check_gain_distribution(params, seed)),
        ("noise_power", lambda: check_noise_power(params, seed)),
        ("expected_rho_mc", lambda: check_expected_rho(params, target, seed)),
        ("approx_dominates_exact", lambda: check_approximation(scenario, bound)),
        ("bound_dominance", lambda: check_bound_dominance(scenario, bound)),
        ("dp_constraint_suite", lambda: check_dp_constraints(params, target, seed)),
        ("epsilon_round_trip", lambda: check_epsilon_round_trip(scenario)),
        ("gradient_check", lambda: check_gradients(seed)),
        ("fedavg_equivalence", lambda: check_fedavg(params, seed)),
    ]
    return [_guarded(name, check) for name, check in checks]
