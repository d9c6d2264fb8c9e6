import logging
import math
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import DecodeError, InvariantViolation
from app.schemas.aircomp import AggregateEstimate, ReceivedSymbol, SnrReport, SymbolTrace
from app.schemas.privacy import ClippedUpdate
from app.schemas.scenario import Policy, PrivacyTarget, SymbolMode, SystemParams
from app.services.channel import draw_channels
from app.services.privacy import compute_rho

logger = logging.getLogger(__name__)


def _amplitude(params: SystemParams, rho: np.ndarray) -> np.ndarray:
    """sqrt(G beta rho)."""
    return np.sqrt(params.antenna_gain_product * params.ref_path_loss * rho)


def complex_noise(rng: np.random.Generator, params: SystemParams, shape: tuple[int, ...]) -> np.ndarray:
    """Samples of n ~ CN(0, sigma_n^2); zeros when noise is disabled."""
    if not params.noise_enabled:
        return np.zeros(shape, dtype=np.complex128)
    scale = math.sqrt(params.noise_power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def empirical_noise_power(params: SystemParams, rng: np.random.Generator, count: int) -> float:
    """Sample mean of |n_0|^2 over ``count`` noise draws."""
    return float(np.mean(np.abs(complex_noise(rng, params, (count,))) ** 2))


def transmit_slot(
    s_column: np.ndarray, rho: np.ndarray | float, params: SystemParams, rng: np.random.Generator
) -> ReceivedSymbol:
    """
    Superpose channel-inverted client symbols and add receiver noise.

    ``s_column`` has shape (..., I); leading axes are independent slots, each
    with fresh noise. A slot whose symbols sum to zero contributes no signal
    even when rho is +inf.

    Args:
        s_column: Client symbols per slot
        rho: Power-scaling factor, scalar or one per slot
        params: System parameters
        rng: Generator for the noise

    Returns:
        Received symbol(s)
    """
    s_column = np.asarray(s_column, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise InvariantViolation("rho must be >= 0")
    total = s_column.sum(axis=-1)
    total, rho_b = np.broadcast_arrays(total, rho)
    with np.errstate(invalid="ignore"):
        signal = np.where(total == 0, 0.0, _amplitude(params, rho_b) * total)
    noise = complex_noise(rng, params, signal.shape)
    return ReceivedSymbol(value=signal + noise, rho_used=rho_b, noise_sample=noise)


def decode_slot(r: ReceivedSymbol, rho: np.ndarray | float, params: SystemParams) -> np.ndarray:
    """
    Estimate sum_i s_i as Re(r) / sqrt(G beta rho).

    Raises:
        DecodeError: If rho is zero for any slot
    """
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho <= 0):
        raise DecodeError("cannot decode with power-scaling factor rho = 0")
    # rho = +inf decodes to exactly 0: nothing was sent and the noise term vanishes
    return np.real(r.value) / _amplitude(params, rho)


def noise_std_per_slot(params: SystemParams, rho: np.ndarray | float) -> np.ndarray:
    """sigma_n / sqrt(2 G beta rho)."""
    rho = np.asarray(rho, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return math.sqrt(params.noise_power) / np.sqrt(2.0 * params.antenna_gain_product * params.ref_path_loss * rho)


def aggregate_round(
    s: ClippedUpdate, rho: np.ndarray | float, params: SystemParams, rng: np.random.Generator
) -> AggregateEstimate:
    """
    Send all D slots of a round through the channel and decode each one.

    Args:
        s: Clipped symbols (D x I)
        rho: Scalar or per-slot power-scaling factor
        params: System parameters
        rng: Generator for the per-slot noise

    Returns:
        Per-slot aggregate estimate with its noise std
    """
    rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), (s.num_slots,))
    received = transmit_slot(s.symbols, rho, params, rng)
    estimate = decode_slot(received, rho, params)
    return AggregateEstimate(estimate=estimate, per_slot_noise_std=noise_std_per_slot(params, rho))


def _block_sizes(num_trials: int, block_size: int) -> list[int]:
    full, rest = divmod(num_trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def measure_snr(
    params: SystemParams,
    target: PrivacyTarget,
    policy: Policy,
    num_trials: int,
    rng: np.random.Generator,
    symbol_mode: SymbolMode = SymbolMode.SATURATED,
    trace: Optional[SymbolTrace] = None,
    block_size: Optional[int] = None,
) -> SnrReport:
    """
    Monte Carlo received SNR E[G beta rho |sum_i s_i|^2] / sigma_n^2.

    Trials run in fixed-size blocks, each with its own generator spawned from
    ``rng``, so the result depends only on ``rng`` and ``num_trials``.

    Args:
        params: System parameters
        target: Privacy target
        policy: Power-scaling policy
        num_trials: Number of channel draws
        rng: Generator the block generators are spawned from
        symbol_mode: Saturated (every s_i = S) or realized (columns from ``trace``)
        trace: Recorded slot columns, required in realized mode
        block_size: Trials per block (defaults to settings.mc_block_size)

    Returns:
        SNR report with standard error
    """
    if num_trials < 1:
        raise InvariantViolation(f"num_trials must be >= 1, got {num_trials}")
    if symbol_mode is SymbolMode.REALIZED:
        if trace is None:
            raise InvariantViolation("realized symbol mode needs a symbol trace")
        if trace.num_clients != params.num_clients:
            raise InvariantViolation(f"trace has {trace.num_clients} clients, params have {params.num_clients}")

    sizes = _block_sizes(num_trials, block_size or settings.mc_block_size)
    block_rngs = rng.spawn(len(sizes))
    power_sum = 0.0
    power_sq_sum = 0.0
    rho_sum = 0.0
    capped = 0

    for index, (size, block_rng) in enumerate(zip(sizes, block_rngs)):
        draw = draw_channels(block_rng, params, size)
        if symbol_mode is SymbolMode.SATURATED:
            symbols = np.full((size, params.num_clients), target.clip_threshold)
        else:
            assert trace is not None
            symbols = trace.columns[block_rng.integers(0, trace.columns.shape[0], size=size)]

        scaling = compute_rho(policy, params, target, draw, symbols)
        total = symbols.sum(axis=-1)
        with np.errstate(invalid="ignore"):
            power = np.where(
                total == 0, 0.0, params.antenna_gain_product * params.ref_path_loss * scaling.rho * total**2
            )
        power_sum += float(power.sum())
        power_sq_sum += float((power**2).sum())
        finite_rho = scaling.rho[np.isfinite(scaling.rho)]
        rho_sum += float(finite_rho.sum())
        capped += int(np.count_nonzero(scaling.dp_capped))
        logger.debug(f"SNR block {index + 1}/{len(sizes)} done ({size} trials)")

    mean_power = power_sum / num_trials
    variance = max(power_sq_sum / num_trials - mean_power**2, 0.0)
    stderr = math.sqrt(variance / num_trials) if num_trials > 1 else 0.0

    return SnrReport(
        policy=policy,
        symbol_mode=symbol_mode,
        num_clients=params.num_clients,
        epsilon=target.epsilon,
        delta=target.delta,
        max_tx_power=params.max_tx_power,
        num_trials=num_trials,
        snr=mean_power / params.noise_power,
        snr_stderr=stderr / params.noise_power,
        mean_rho=rho_sum / num_trials,
        dp_capped_fraction=capped / num_trials,
    )
