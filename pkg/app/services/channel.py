import numpy as np

from app.core.exceptions import InvariantViolation
from app.schemas.channel import ChannelDraw, EffectiveGain
from app.schemas.scenario import SystemParams


def path_gains(params: SystemParams) -> np.ndarray:
    """r_i^(-alpha) per client."""
    return np.asarray(params.distances, dtype=np.float64) ** (-params.path_loss_exponent)


def draw_channels(rng: np.random.Generator, params: SystemParams, count: int) -> ChannelDraw:
    """Draw ``count`` independent realizations as one ChannelDraw of shape (count, I)."""
    shape = (count, params.num_clients)
    # CN(0, 1): variance 1/2 per real dimension
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return ChannelDraw(gains=(real + 1j * imag) * np.sqrt(0.5))


def draw_channel(rng: np.random.Generator, params: SystemParams) -> ChannelDraw:
    """
    Draw one set of per-client fading gains h_i ~ CN(0, 1).

    Args:
        rng: Seeded generator
        params: System parameters (uses num_clients)

    Returns:
        ChannelDraw with gains of shape (I,)
    """
    batch = draw_channels(rng, params, 1)
    return ChannelDraw(gains=batch.gains[0])


def effective_gains(draw: ChannelDraw, params: SystemParams) -> np.ndarray:
    """r_i^(-alpha)|h_i|^2 with shape matching ``draw.gains``."""
    if draw.num_clients != params.num_clients:
        raise InvariantViolation(f"draw has {draw.num_clients} clients, params have {params.num_clients}")
    return draw.power_gains * path_gains(params)


def min_effective_gain(draw: ChannelDraw, params: SystemParams) -> EffectiveGain:
    """
    Minimum over clients of r_i^(-alpha)|h_i|^2.

    For batched draws the minimum is taken over the client axis only.
    """
    return EffectiveGain(value=np.min(effective_gains(draw, params), axis=-1))


def sample_effective_gains(rng: np.random.Generator, params: SystemParams, count: int) -> np.ndarray:
    """``count`` independent samples of the minimum effective gain."""
    return min_effective_gain(draw_channels(rng, params, count), params).value


def effective_gain_ccdf(x: float, params: SystemParams) -> float:
    """
    P(g >= x) for the minimum effective gain: exp(-x * sum_i r_i^alpha).

    Raises:
        InvariantViolation: If x is negative
    """
    if x < 0:
        raise InvariantViolation(f"x must be >= 0, got {x}")
    return float(np.exp(-x * params.sum_r_alpha))
