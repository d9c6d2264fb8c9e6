"""Unit conversions used at the configuration and report boundaries.

Everything inside the simulator is SI: watts, meters and linear power ratios.
"""

import math

from app.core.exceptions import InvariantViolation


def _require_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise InvariantViolation(f"{name} must be finite, got {value!r}")


def dbm_to_watts(x_dbm: float) -> float:
    """Convert decibel-milliwatts to watts."""
    _require_finite(x_dbm, "x_dbm")
    return 10.0 ** (x_dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    """Convert watts to decibel-milliwatts."""
    if not watts > 0:
        raise InvariantViolation(f"watts must be positive, got {watts!r}")
    return 10.0 * math.log10(watts * 1000.0)


def db_to_linear(x_db: float) -> float:
    """Convert decibels to a linear power ratio."""
    _require_finite(x_db, "x_db")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(ratio: float) -> float:
    """Convert a linear power ratio to decibels; zero maps to -inf."""
    if ratio < 0:
        raise InvariantViolation(f"ratio must be non-negative, got {ratio!r}")
    if ratio == 0:
        return -math.inf
    return 10.0 * math.log10(ratio)
