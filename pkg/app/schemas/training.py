from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.privacy import ClippedUpdate
from app.schemas.scenario import Activation, Policy


class Dataset(BaseModel):
    """Labelled samples: features (n, F) and integer labels in [0, num_classes)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray
    labels: np.ndarray
    num_classes: int = Field(..., ge=1)

    @field_validator("features", mode="before")
    @classmethod
    def validate_features(cls, v: Any) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("features must be a nonempty (n, F) array")
        if not np.issubdtype(v.dtype, np.floating):
            v = v.astype(np.float64)
        return v

    @field_validator("labels", mode="before")
    @classmethod
    def validate_labels(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.int64)

    @model_validator(mode="after")
    def check_consistency(self) -> "Dataset":
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(f"{self.features.shape[0]} samples but labels have shape {self.labels.shape}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        return self

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    def take(self, indices: np.ndarray) -> "Dataset":
        """Samples at ``indices`` as a new dataset."""
        return Dataset(features=self.features[indices], labels=self.labels[indices], num_classes=self.num_classes)


class ModelParams(BaseModel):
    """Flat parameter vector of a fully connected network.

    Order is layer-major; within a layer the (fan_in, fan_out) weight matrix
    in row-major order comes first, then the bias vector.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta: np.ndarray
    layer_sizes: tuple[int, ...]
    activation: Activation = Activation.RELU

    @field_validator("theta", mode="before")
    @classmethod
    def validate_theta(cls, v: Any) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("theta must be a flat vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("theta must be finite")
        return v

    @model_validator(mode="after")
    def check_length(self) -> "ModelParams":
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        expected = sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        if self.theta.shape[0] != expected:
            raise ValueError(f"theta has length {self.theta.shape[0]}, architecture needs {expected}")
        return self

    @property
    def dimension(self) -> int:
        """D, the number of slots one update occupies."""
        return int(self.theta.shape[0])

    def with_theta(self, theta: np.ndarray) -> "ModelParams":
        return ModelParams(theta=theta, layer_sizes=self.layer_sizes, activation=self.activation)


class RoundStats(BaseModel):
    """What one federated round did to the channel and to privacy."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    policy: Policy
    num_slots: int
    rho: np.ndarray = Field(..., description="Power-scaling factor per slot")
    per_slot_noise_std: np.ndarray
    dp_capped_fraction: float
    epsilon_target: float
    epsilon_worst_slot: float = Field(..., description="Epsilon implied by the largest finite rho of the round")
    tx_power_max: np.ndarray = Field(..., description="Largest transmit power per client over the round, watts")
    max_symbol: float
    clip_bound_ok: bool
    snr_estimate: float = Field(..., description="Mean per-slot received SNR of the realized symbols")
    symbols: Optional[ClippedUpdate] = Field(default=None, exclude=True)

    @field_validator("rho", "per_slot_noise_std", "tx_power_max", mode="before")
    @classmethod
    def as_float(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)

    @property
    def mean_rho(self) -> float:
        finite = self.rho[np.isfinite(self.rho)]
        return float(finite.mean()) if finite.size else 0.0


class TraceRow(BaseModel):
    """One row of a training trace."""

    round: int
    policy: Policy
    num_clients: int
    epsilon_target: float
    epsilon_achieved: float = Field(..., description="Epsilon from the running mean rho")
    epsilon_worst_slot: float
    rho: float
    snr_estimate: float
    test_accuracy: float
    releases: int
    dataset: str
