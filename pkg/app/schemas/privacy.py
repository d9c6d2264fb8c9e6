from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.schemas.scenario import Policy


class ClippedUpdate(BaseModel):
    """Transmit symbols s_i^(d): D coordinates (slots) by I clients."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    symbols: np.ndarray

    @field_validator("symbols", mode="before")
    @classmethod
    def validate_symbols(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"symbols must be a (D, I) matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("symbols must be finite")
        return v

    @classmethod
    def from_client_vectors(cls, vectors: list[np.ndarray]) -> "ClippedUpdate":
        """Stack per-client length-D vectors as columns."""
        return cls(symbols=np.stack(vectors, axis=1))

    @property
    def num_slots(self) -> int:
        return int(self.symbols.shape[0])

    @property
    def num_clients(self) -> int:
        return int(self.symbols.shape[1])

    @property
    def max_magnitude(self) -> float:
        return float(np.max(np.abs(self.symbols))) if self.symbols.size else 0.0

    def column_sums(self) -> np.ndarray:
        """Sum over clients per slot (the aggregate AirComp computes)."""
        return self.symbols.sum(axis=1)


class PowerScaling(BaseModel):
    """Power-scaling factor rho chosen by a policy.

    ``rho`` and ``dp_capped`` are arrays broadcast over slots and/or draws; a
    0-d array for a single slot. Slots in which no client transmits anything
    get rho = +inf under the conventional policy.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rho: np.ndarray
    policy: Policy
    dp_capped: np.ndarray

    @field_validator("rho", mode="before")
    @classmethod
    def validate_rho(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if np.any(np.isnan(v)) or np.any(v < 0):
            raise ValueError("rho must be >= 0")
        return v

    @field_validator("dp_capped", mode="before")
    @classmethod
    def validate_dp_capped(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=bool)

    def __float__(self) -> float:
        return float(self.rho)
