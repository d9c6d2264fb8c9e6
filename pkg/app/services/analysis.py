"""Closed forms for the SNR bound, its approximation and the mean of rho**.

1 - exp(-x) is always evaluated as -expm1(-x); x is often around 1e-3.
"""

import math
from typing import Iterable

from app.core.exceptions import InvariantViolation
from app.core.units import linear_to_db
from app.schemas.analysis import SnrBoundPoint
from app.schemas.scenario import PrivacyTarget, SystemParams
from app.services.privacy import g_threshold, log_delta_term


def _one_minus_exp(x: float) -> float:
    return -math.expm1(-x)


def snr_bound(params: SystemParams, target: PrivacyTarget) -> float:
    """
    Upper bound on the received SNR under rho**.

    (G beta I^2 P0 / (sum r^alpha sigma_n^2)) * [1 - exp(-g_th sum r^alpha)]
    """
    gb = params.antenna_gain_product * params.ref_path_loss
    sum_r = params.sum_r_alpha
    prefactor = gb * params.num_clients**2 * params.max_tx_power / (sum_r * params.noise_power)
    return prefactor * _one_minus_exp(g_threshold(params, target) * sum_r)


def snr_bound_db(params: SystemParams, target: PrivacyTarget) -> float:
    return linear_to_db(snr_bound(params, target))


def snr_bound_approx(num_clients: int, epsilon: float, delta: float) -> float:
    """First-order approximation I^2 eps^2 / (4 ln(1.25/delta)); depends only on I and the privacy level."""
    if num_clients < 1 or not epsilon > 0:
        raise InvariantViolation(f"need I >= 1 and epsilon > 0, got I={num_clients}, epsilon={epsilon}")
    return num_clients**2 * epsilon**2 / (4.0 * log_delta_term(delta))


def expected_rho_star_star(params: SystemParams, target: PrivacyTarget) -> float:
    """Mean of rho** over Rayleigh fading: (P0 / (S^2 sum r^alpha)) (1 - exp(-g_th sum r^alpha))."""
    sum_r = params.sum_r_alpha
    return (
        params.max_tx_power
        / (target.clip_threshold**2 * sum_r)
        * _one_minus_exp(g_threshold(params, target) * sum_r)
    )


def _gain_shortfall_moments(a: float) -> tuple[float, float]:
    """E[Y] and E[Y^2] of Y = (a - z)+ with z ~ Exp(1)."""
    first = a + math.expm1(-a)
    if a < 1e-3:
        second = a**3 / 3.0 - a**4 / 12.0 + a**5 / 60.0
    else:
        second = a * a - 2.0 * a - 2.0 * math.expm1(-a)
    return first, second


def saturated_snr_stderr(params: SystemParams, target: PrivacyTarget, num_trials: int) -> float:
    """
    Standard error of a ``num_trials`` Monte Carlo estimate of the saturated SNR under rho**.

    Per trial the SNR is (G beta I^2 P0 / sigma_n^2) min(g, g_th) with
    g ~ Exp(sum r^alpha); the variance of min(g, g_th) is known in closed form.
    """
    if num_trials < 1:
        raise InvariantViolation(f"num_trials must be >= 1, got {num_trials}")
    sum_r = params.sum_r_alpha
    first, second = _gain_shortfall_moments(g_threshold(params, target) * sum_r)
    variance = max(second - first * first, 0.0) / sum_r**2
    gb = params.antenna_gain_product * params.ref_path_loss
    scale = gb * params.num_clients**2 * params.max_tx_power / params.noise_power
    return scale * math.sqrt(variance / num_trials)


def bound_point(params: SystemParams, target: PrivacyTarget) -> SnrBoundPoint:
    """All closed-form quantities at one scenario point."""
    return SnrBoundPoint(
        epsilon=target.epsilon,
        delta=target.delta,
        num_clients=params.num_clients,
        max_tx_power=params.max_tx_power,
        g_th=g_threshold(params, target),
        exact_bound=snr_bound(params, target),
        approx_bound=snr_bound_approx(params.num_clients, target.epsilon, target.delta),
        expected_rho=expected_rho_star_star(params, target),
    )


def tradeoff_table(
    params: SystemParams,
    epsilon_grid: Iterable[float],
    num_clients_grid: Iterable[int],
    delta: float,
    *,
    clip_threshold: float,
) -> list[SnrBoundPoint]:
    """
    One SnrBoundPoint per (epsilon, I), sorted by (I, epsilon).

    Other fields of ``params`` are held fixed; distances must be uniform to
    vary I. Only ``expected_rho`` depends on ``clip_threshold``.
    """
    epsilons = sorted(set(epsilon_grid))
    client_counts = sorted(set(num_clients_grid))
    if not epsilons or not client_counts:
        raise InvariantViolation("tradeoff grids must not be empty")

    rows = []
    for num_clients in client_counts:
        point_params = params.with_num_clients(num_clients)
        for epsilon in epsilons:
            target = PrivacyTarget(epsilon=epsilon, delta=delta, clip_threshold=clip_threshold)
            rows.append(bound_point(point_params, target))
    return rows

