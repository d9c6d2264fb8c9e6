import numpy as np
import pytest
from scipy import stats

from app.core.exceptions import InvariantViolation
from app.core.seeding import child_rng
from app.schemas.channel import ChannelDraw
from app.schemas.scenario import SystemParams
from app.services.channel import (
    draw_channel,
    draw_channels,
    effective_gain_ccdf,
    effective_gains,
    min_effective_gain,
    sample_effective_gains,
)
from app.services.privacy import rho_star, rho_star_star


def test_draw_shapes(params, rng):
    assert draw_channel(rng, params).gains.shape == (5,)
    assert draw_channels(rng, params, 7).gains.shape == (7, 5)


def test_unit_mean_power(params, rng):
    draw = draw_channels(rng, params, 200_000)
    assert draw.power_gains.mean() == pytest.approx(1.0, rel=0.01)


def test_same_key_same_draw(params):
    a = draw_channel(child_rng(7, "channel", 5, 0), params)
    b = draw_channel(child_rng(7, "channel", 5, 0), params)
    c = draw_channel(child_rng(7, "channel", 5, 1), params)
    np.testing.assert_array_equal(a.gains, b.gains)
    assert not np.array_equal(a.gains, c.gains)


def test_min_gain_of_known_draw(params):
    draw = ChannelDraw(gains=np.array([1.0, 2.0, 0.5j, 1.0, 3.0]))
    assert float(min_effective_gain(draw, params)) == pytest.approx(0.25 / 100.0**2)


def test_draw_with_wrong_client_count(params):
    with pytest.raises(InvariantViolation):
        effective_gains(ChannelDraw(gains=np.ones(3)), params)


def test_min_gain_is_exponential(params):
    gains = sample_effective_gains(child_rng(1, "ks"), params, 100_000)
    result = stats.kstest(gains, "expon", args=(0.0, 1.0 / params.sum_r_alpha))
    assert result.pvalue > 0.01


def test_ccdf_matches_empirical_tail(params, rng):
    gains = sample_effective_gains(rng, params, 200_000)
    x = 1.0 / params.sum_r_alpha
    assert np.mean(gains >= x) == pytest.approx(effective_gain_ccdf(x, params), abs=0.005)


def test_ccdf_edges(params):
    assert effective_gain_ccdf(0.0, params) == 1.0
    with pytest.raises(InvariantViolation):
        effective_gain_ccdf(-1e-9, params)


def test_single_draw_gives_scalar_gain(params, rng):
    gain = min_effective_gain(draw_channel(rng, params), params)
    assert gain.value.shape == ()
    assert float(gain) > 0


def test_client_order_does_not_matter(params, target, rng):
    spread = SystemParams.model_validate({**params.model_dump(), "distances": (60.0, 80.0, 100.0, 120.0, 140.0)})
    order = np.array([3, 0, 4, 1, 2])
    shuffled = SystemParams.model_validate(
        {**spread.model_dump(), "distances": tuple(spread.distances[i] for i in order)}
    )
    symbols = rng.uniform(-target.clip_threshold, target.clip_threshold, size=(200, 5))
    for draw in (draw_channel(rng, spread), draw_channels(rng, spread, 200)):
        permuted = ChannelDraw(gains=draw.gains[..., order])
        np.testing.assert_array_equal(
            min_effective_gain(draw, spread).value, min_effective_gain(permuted, shuffled).value
        )
        np.testing.assert_array_equal(
            rho_star_star(spread, target, draw).rho, rho_star_star(shuffled, target, permuted).rho
        )
    batch = draw_channels(rng, spread, 200)
    np.testing.assert_array_equal(
        rho_star(spread, target, batch, symbols).rho,
        rho_star(shuffled, target, ChannelDraw(gains=batch.gains[..., order]), symbols[..., order]).rho,
    )


def test_extra_client_never_raises_min_gain(params, rng):
    larger = params.with_num_clients(6)
    draw = draw_channels(rng, larger, 5000)
    with_extra = min_effective_gain(draw, larger).value
    without = min_effective_gain(ChannelDraw(gains=draw.gains[:, :5]), params).value
    assert np.all(with_extra <= without)
