import math

import numpy as np
import pytest

from app.core.exceptions import DecodeError, InvariantViolation
from app.core.seeding import child_rng
from app.core.units import dbm_to_watts
from app.schemas.aircomp import SymbolTrace
from app.schemas.privacy import ClippedUpdate
from app.schemas.scenario import Policy, SymbolMode
from app.services.aircomp import (
    aggregate_round,
    complex_noise,
    decode_slot,
    empirical_noise_power,
    measure_snr,
    noise_std_per_slot,
    transmit_slot,
)
from app.services.analysis import snr_bound, snr_bound_approx


@pytest.fixture
def noiseless(params):
    return params.model_copy(update={"noise_enabled": False})


def test_noiseless_round_trip_is_exact(noiseless, rng):
    column = np.array([0.1, -0.2, 0.05, 0.0, 0.3])
    received = transmit_slot(column, 0.15, noiseless, rng)
    assert decode_slot(received, 0.15, noiseless) == pytest.approx(column.sum(), rel=1e-12)


def test_decode_with_zero_rho_fails(params, rng):
    received = transmit_slot(np.ones(5), 0.1, params, rng)
    with pytest.raises(DecodeError):
        decode_slot(received, 0.0, params)


def test_negative_rho_rejected(params, rng):
    with pytest.raises(InvariantViolation):
        transmit_slot(np.ones(5), -1.0, params, rng)


def test_silent_slot_with_infinite_rho_decodes_to_zero(params, rng):
    estimate = aggregate_round(ClippedUpdate(symbols=np.zeros((3, 5))), np.inf, params, rng)
    np.testing.assert_array_equal(estimate.estimate, np.zeros(3))


def test_noise_power_matches_configuration(params, noiseless, rng):
    assert empirical_noise_power(params, rng, 200_000) == pytest.approx(params.noise_power, rel=0.01)
    assert empirical_noise_power(noiseless, rng, 100) == 0.0


def test_decoded_noise_std(params, rng):
    rho = 0.1
    symbols = ClippedUpdate(symbols=np.zeros((100_000, 5)) + 1e-5)
    estimate = aggregate_round(symbols, rho, params, rng)
    errors = estimate.estimate - symbols.column_sums()
    expected = float(noise_std_per_slot(params, rho))
    assert errors.std() == pytest.approx(expected, rel=0.02)
    np.testing.assert_allclose(estimate.per_slot_noise_std, expected)


def test_measure_snr_is_reproducible(params, target):
    first = measure_snr(params, target, Policy.DP_STAR_STAR, 5000, child_rng(3, "snr"), block_size=1000)
    second = measure_snr(params, target, Policy.DP_STAR_STAR, 5000, child_rng(3, "snr"), block_size=1000)
    assert first == second


def test_measure_snr_at_strict_privacy_sits_at_cap(params, target):
    report = measure_snr(params, target, Policy.DP_STAR_STAR, 20_000, child_rng(4, "snr"))
    assert report.snr <= snr_bound(params, target) + 3 * report.snr_stderr
    assert report.snr == pytest.approx(snr_bound_approx(5, 0.01, 0.1), rel=0.01)
    assert report.dp_capped_fraction > 0.99


def test_realized_mode_needs_matching_trace(params, target):
    with pytest.raises(InvariantViolation):
        measure_snr(params, target, Policy.DP_STAR_STAR, 10, child_rng(5), symbol_mode=SymbolMode.REALIZED)
    trace = SymbolTrace(columns=np.ones((4, 3)))
    with pytest.raises(InvariantViolation):
        measure_snr(
            params, target, Policy.DP_STAR_STAR, 10, child_rng(5), symbol_mode=SymbolMode.REALIZED, trace=trace
        )


def test_realized_mode_below_saturated(params, target):
    S = target.clip_threshold
    trace = SymbolTrace(columns=np.full((8, 5), S / 2))
    realized = measure_snr(
        params, target, Policy.DP_STAR_STAR, 10_000, child_rng(6), symbol_mode=SymbolMode.REALIZED, trace=trace
    )
    saturated = measure_snr(params, target, Policy.DP_STAR_STAR, 10_000, child_rng(6))
    assert realized.snr == pytest.approx(saturated.snr / 4, rel=1e-9)


def test_silent_trace_has_zero_snr(params, target):
    trace = SymbolTrace(columns=np.zeros((2, 5)))
    report = measure_snr(
        params, target, Policy.CONVENTIONAL, 100, child_rng(7), symbol_mode=SymbolMode.REALIZED, trace=trace
    )
    assert report.snr == 0.0
    assert report.snr_db == -math.inf


@pytest.mark.slow
@pytest.mark.parametrize("epsilon", [0.01, 0.1, 0.5, 0.95])
@pytest.mark.parametrize("num_clients", [5, 100])
def test_measured_snr_below_bound(params, target, epsilon, num_clients):
    point_params = params.with_num_clients(num_clients)
    point_target = target.with_epsilon(epsilon)
    report = measure_snr(point_params, point_target, Policy.DP_STAR_STAR, 100_000, child_rng(8, num_clients))
    assert report.snr <= snr_bound(point_params, point_target) + 3 * report.snr_stderr


@pytest.mark.slow
def test_snr_scales_with_clients_not_power(params, target):
    def snr(num_clients, p0_dbm):
        point = params.with_num_clients(num_clients).with_max_tx_power(dbm_to_watts(p0_dbm))
        return measure_snr(point, target, Policy.DP_STAR_STAR, 100_000, child_rng(9, num_clients)).snr

    for num_clients in (5, 10, 25, 50, 100):
        low, high = snr(num_clients, 10), snr(num_clients, 30)
        assert abs(low - high) / high < 0.05
    assert snr(100, 10) / snr(5, 10) == pytest.approx(400, rel=0.1)


def test_single_slot_with_noise(params, rng):
    received = transmit_slot(np.full(5, 1e-5), 0.15, params, rng)
    assert received.value.shape == ()
    assert np.isfinite(decode_slot(received, 0.15, params))


def test_noise_is_circular_with_half_variance_per_part(params):
    noise = complex_noise(child_rng(21, "noise"), params, (400_000,)) / math.sqrt(params.noise_power)
    assert noise.real.var() == pytest.approx(0.5, rel=0.02)
    assert noise.imag.var() == pytest.approx(0.5, rel=0.02)
    assert abs(np.corrcoef(noise.real, noise.imag)[0, 1]) < 0.01


def test_noise_is_uncorrelated_across_slots(params, rng):
    received = transmit_slot(np.zeros((400_000, 5)), 0.1, params, rng)
    noise = received.noise_sample
    assert abs(np.corrcoef(noise.real[:-1], noise.real[1:])[0, 1]) < 0.01
    assert abs(np.corrcoef(noise.imag[:-1], noise.imag[1:])[0, 1]) < 0.01
