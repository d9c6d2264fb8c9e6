from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.units import linear_to_db
from app.schemas.scenario import Policy, SymbolMode


class ReceivedSymbol(BaseModel):
    """Post-matched-filter received symbol r = sqrt(G beta rho) sum_i s_i + n_0, per slot."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: np.ndarray
    rho_used: np.ndarray
    noise_sample: np.ndarray = Field(..., description="Injected noise, kept for white-box tests")

    @field_validator("value", "noise_sample", mode="before")
    @classmethod
    def as_complex(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.complex128)

    @field_validator("rho_used", mode="before")
    @classmethod
    def as_float(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)


class AggregateEstimate(BaseModel):
    """Decoded per-slot aggregate and the std of its noise term sigma_n / sqrt(2 G beta rho)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    estimate: np.ndarray
    per_slot_noise_std: np.ndarray

    @field_validator("estimate", "per_slot_noise_std", mode="before")
    @classmethod
    def as_float(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)


class SymbolTrace(BaseModel):
    """Slot columns (one row per slot, one column per client) recorded during training."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    columns: np.ndarray

    @field_validator("columns", mode="before")
    @classmethod
    def validate_columns(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("trace needs at least one (slot, client) row")
        return v

    @property
    def num_clients(self) -> int:
        return int(self.columns.shape[1])


class SnrReport(BaseModel):
    """Monte Carlo SNR measurement for one scenario point."""

    policy: Policy
    symbol_mode: SymbolMode
    num_clients: int
    epsilon: float
    delta: float
    max_tx_power: float
    num_trials: int
    snr: float = Field(..., description="Linear SNR")
    snr_stderr: float = Field(..., description="Standard error of the linear SNR")
    mean_rho: float
    dp_capped_fraction: float

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.snr)
