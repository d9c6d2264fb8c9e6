"""Update clipping, the DP power-scaling constraint and the power-control policies.

Policy functions broadcast: a draw of shape (..., I) combines with slot
columns of shape (..., I), so one call covers a whole round (D slots) or a
batch of Monte Carlo trials.
"""

import logging
import math
from typing import Optional

import numpy as np

from app.core.exceptions import InvariantViolation
from app.schemas.channel import ChannelDraw
from app.schemas.privacy import ClippedUpdate, PowerScaling
from app.schemas.scenario import ClipMode, Policy, PrivacyTarget, SystemParams
from app.services.channel import effective_gains

logger = logging.getLogger(__name__)


def log_delta_term(delta: float) -> float:
    """ln(1.25/delta); defined only for 0 < delta < 1.25."""
    if not 0 < delta < 1.25:
        raise InvariantViolation(f"delta must lie in (0, 1.25), got {delta}")
    return math.log(1.25 / delta)


def clip_update(
    delta_i: np.ndarray, w_i: float, w_sum: float, S: float, mode: ClipMode = ClipMode.FLAT
) -> np.ndarray:
    """
    Weight a local update and clip it to threshold S.

    Flat mode scales the whole weighted vector so its L2 norm is at most S,
    which bounds every coordinate by S as well. Per-coordinate mode clips
    each coordinate to [-S, S] independently.

    Args:
        delta_i: Local update of length D
        w_i: Client weight
        w_sum: Sum of all client weights
        S: Clipping threshold
        mode: Clipping norm

    Returns:
        Transmit symbols s_i of length D

    Raises:
        InvariantViolation: On non-finite coordinates or invalid weights/threshold
    """
    delta_i = np.asarray(delta_i, dtype=np.float64)
    if not np.all(np.isfinite(delta_i)):
        raise InvariantViolation("update contains non-finite coordinates")
    if not w_i > 0 or w_sum < w_i:
        raise InvariantViolation(f"need 0 < w_i <= w_sum, got w_i={w_i}, w_sum={w_sum}")
    if not S > 0:
        raise InvariantViolation(f"clip threshold must be > 0, got {S}")

    weighted = (w_i / w_sum) * delta_i
    if mode is ClipMode.PER_COORDINATE:
        return np.clip(weighted, -S, S)

    norm = float(np.linalg.norm(weighted))
    if norm <= S:
        return weighted
    return weighted * (S / norm)


def sensitivity(s: ClippedUpdate, d: int) -> float:
    """Query sensitivity of slot d: max over clients of |s_k^(d)|."""
    if not 0 <= d < s.num_slots:
        raise InvariantViolation(f"coordinate {d} out of range for D={s.num_slots}")
    column = s.symbols[d]
    return float(np.max(np.abs(column))) if column.size else 0.0


def g_threshold(params: SystemParams, target: PrivacyTarget) -> float:
    """Effective-gain threshold g_th = sigma_n^2 eps^2 / (4 G beta P0 ln(1.25/delta))."""
    return (
        params.noise_power
        * target.epsilon**2
        / (
            4.0
            * params.antenna_gain_product
            * params.ref_path_loss
            * params.max_tx_power
            * log_delta_term(target.delta)
        )
    )


def dp_rho_cap(params: SystemParams, target: PrivacyTarget) -> float:
    """
    Largest rho for which the aggregate is (epsilon, delta)-DP.

    Returns sigma_n^2 eps^2 / (4 G beta S^2 ln(1.25/delta)).
    """
    return (
        params.noise_power
        * target.epsilon**2
        / (
            4.0
            * params.antenna_gain_product
            * params.ref_path_loss
            * target.clip_threshold**2
            * log_delta_term(target.delta)
        )
    )


def _channel_branch(params: SystemParams, draw: ChannelDraw, s_column: np.ndarray) -> np.ndarray:
    """min_i r_i^(-alpha)|h_i|^2 / |s_i|^2 with silent clients contributing +inf."""
    gains = effective_gains(draw, params)
    power = np.abs(np.asarray(s_column, dtype=np.float64)) ** 2
    gains, power = np.broadcast_arrays(gains, power)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(power > 0, gains / np.where(power > 0, power, 1.0), np.inf)
    return np.min(ratios, axis=-1)


def rho_star(
    params: SystemParams, target: PrivacyTarget, draw: ChannelDraw, s_column: np.ndarray
) -> PowerScaling:
    """
    DP-preserving power control that knows every client's symbol.

    rho* = P0 min{ min_i r_i^(-alpha)|h_i|^2/|s_i|^2, cap / P0 }. A slot in
    which every symbol is zero falls back to the DP cap.
    """
    channel = params.max_tx_power * _channel_branch(params, draw, s_column)
    cap = dp_rho_cap(params, target)
    rho = np.minimum(channel, cap)
    return PowerScaling(rho=rho, policy=Policy.DP_STAR, dp_capped=cap <= channel)


def rho_star_star(params: SystemParams, target: PrivacyTarget, draw: ChannelDraw) -> PowerScaling:
    """
    DP-preserving power control that needs no knowledge of the symbols.

    rho** = (P0/S^2) min{ min_i r_i^(-alpha)|h_i|^2, g_th }.
    """
    g = np.min(effective_gains(draw, params), axis=-1)
    g_th = g_threshold(params, target)
    rho = (params.max_tx_power / target.clip_threshold**2) * np.minimum(g, g_th)
    return PowerScaling(rho=rho, policy=Policy.DP_STAR_STAR, dp_capped=g_th <= g)


def rho_conventional(params: SystemParams, draw: ChannelDraw, s_column: np.ndarray) -> PowerScaling:
    """
    Channel inversion at full power: rho_conv = P0 min_i r_i^(-alpha)|h_i|^2/|s_i|^2.

    Slots where every symbol is zero carry nothing and get rho = +inf.
    """
    rho = params.max_tx_power * _channel_branch(params, draw, s_column)
    return PowerScaling(rho=rho, policy=Policy.CONVENTIONAL, dp_capped=np.zeros_like(rho, dtype=bool))


def compute_rho(
    policy: Policy,
    params: SystemParams,
    target: PrivacyTarget,
    draw: ChannelDraw,
    s_column: Optional[np.ndarray] = None,
) -> PowerScaling:
    """Evaluate ``policy`` on a draw; symbol-aware policies need ``s_column``."""
    if policy is Policy.DP_STAR_STAR:
        return rho_star_star(params, target, draw)
    if s_column is None:
        raise InvariantViolation(f"policy {policy.value} needs the transmitted symbols")
    if policy is Policy.DP_STAR:
        return rho_star(params, target, draw, s_column)
    return rho_conventional(params, draw, s_column)


def epsilon_achieved(params: SystemParams, rho: float, S: float, delta: float) -> float:
    """
    Privacy level reached by a given rho (the DP cap solved for epsilon).

    Returns 2 S sqrt(G beta rho ln(1.25/delta)) / sigma_n.
    """
    if rho < 0:
        raise InvariantViolation(f"rho must be >= 0, got {rho}")
    return (
        2.0
        * S
        * math.sqrt(params.antenna_gain_product * params.ref_path_loss * rho * log_delta_term(delta))
        / math.sqrt(params.noise_power)
    )


def tx_power_per_client(
    rho: np.ndarray | float, draw: ChannelDraw, s_column: np.ndarray, params: SystemParams
) -> np.ndarray:
    """
    Transmit power |b_i s_i|^2 = rho |s_i|^2 / (r_i^(-alpha)|h_i|^2) per client.

    Silent clients and clients with zero channel gain contribute 0.
    """
    gains = effective_gains(draw, params)
    power = np.abs(np.asarray(s_column, dtype=np.float64)) ** 2
    rho = np.asarray(rho, dtype=np.float64)[..., np.newaxis]
    gains, power, rho = np.broadcast_arrays(gains, power, rho)
    if np.any((gains == 0) & (power > 0)):
        logger.warning("Client with zero channel gain excluded from transmission")
    active = (power > 0) & (gains > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(active, rho * power / np.where(active, gains, 1.0), 0.0)


class PrivacyLedger:
    """
    Running record of released slots.

    Keeps the mean rho over every slot that carried a signal (the average
    power-scaling factor used to report a policy's privacy level) and the
    number of Gaussian-mechanism releases. Releases are counted, not composed.
    """

    def __init__(self) -> None:
        self.releases = 0
        self._rho_sum = 0.0
        self._rho_count = 0
        self._rho_max = 0.0

    def record(self, rho: np.ndarray, num_slots: int) -> None:
        """Record one round of ``num_slots`` releases using power-scaling ``rho``."""
        rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), (num_slots,))
        finite = rho[np.isfinite(rho)]
        self.releases += num_slots
        self._rho_sum += float(finite.sum())
        self._rho_count += int(finite.size)
        if finite.size:
            self._rho_max = max(self._rho_max, float(finite.max()))

    @property
    def mean_rho(self) -> float:
        return self._rho_sum / self._rho_count if self._rho_count else 0.0

    @property
    def max_rho(self) -> float:
        return self._rho_max

    def epsilon(self, params: SystemParams, target: PrivacyTarget) -> float:
        """Epsilon implied by the running mean rho."""
        return epsilon_achieved(params, self.mean_rho, target.clip_threshold, target.delta)


def epsilon_for_slots(params: SystemParams, target: PrivacyTarget, rho: np.ndarray) -> float:
    """Worst-slot epsilon of one round (largest finite rho)."""
    rho = np.asarray(rho, dtype=np.float64)
    finite = rho[np.isfinite(rho)]
    worst = float(finite.max()) if finite.size else 0.0
    return epsilon_achieved(params, worst, target.clip_threshold, target.delta)
