from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class ChannelDraw(BaseModel):
    """Rayleigh fading gains h_i ~ CN(0, 1), one per client.

    ``gains`` has shape ``(..., I)``; leading axes index independent draws
    (Monte Carlo trials or per-slot fading).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gains: np.ndarray

    @field_validator("gains", mode="before")
    @classmethod
    def validate_gains(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.ndim < 1 or v.shape[-1] < 1:
            raise ValueError("gains need a trailing client axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("gains must be finite")
        return v

    @property
    def num_clients(self) -> int:
        return int(self.gains.shape[-1])

    @property
    def power_gains(self) -> np.ndarray:
        """|h_i|^2."""
        return np.abs(self.gains) ** 2


class EffectiveGain(BaseModel):
    """g = min_i r_i^(-alpha)|h_i|^2, per draw."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: np.ndarray

    @field_validator("value", mode="before")
    @classmethod
    def validate_value(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if np.any(v < 0):
            raise ValueError("effective gain must be >= 0")
        return v

    def __float__(self) -> float:
        return float(self.value)
