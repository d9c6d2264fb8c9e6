from enum import Enum
from typing import NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.exceptions import InvariantViolation


class Policy(str, Enum):
    """Power-scaling policy."""

    CONVENTIONAL = "conventional"
    DP_STAR = "dp_star"
    DP_STAR_STAR = "dp_star_star"


class ClipMode(str, Enum):
    """Update clipping norm."""

    FLAT = "flat"
    PER_COORDINATE = "per_coordinate"


class FadingMode(str, Enum):
    """Channel redraw granularity."""

    PER_ROUND = "per_round"
    PER_SLOT = "per_slot"


class SymbolMode(str, Enum):
    """Symbols used for SNR measurement."""

    SATURATED = "saturated"
    REALIZED = "realized"


class Activation(str, Enum):
    """Hidden-layer activation."""

    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"


class DatasetKind(str, Enum):
    """Training data source."""

    MNIST = "mnist"
    SYNTHETIC = "synthetic"


class SystemParams(BaseModel):
    """Physical-layer constants in SI units."""

    model_config = ConfigDict(frozen=True)

    num_clients: int = Field(..., ge=1, description="Number of clients I")
    antenna_gain_product: float = Field(..., gt=0, description="G, linear")
    ref_path_loss: float = Field(..., gt=0, description="beta, linear path loss at unit distance")
    path_loss_exponent: float = Field(..., ge=0, description="alpha")
    noise_power: float = Field(..., gt=0, description="sigma_n^2 in watts")
    max_tx_power: float = Field(..., gt=0, description="P0 in watts")
    carrier_freq: float = Field(default=5.0e9, gt=0, description="Carrier frequency in Hz (informational)")
    distances: tuple[float, ...] = Field(..., description="Client distances r_i in meters")
    noise_enabled: bool = Field(default=True, description="Disable only for exact-identity verification")
    fading: FadingMode = FadingMode.PER_ROUND

    @field_validator("distances")
    @classmethod
    def validate_distances(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """All distances must be positive."""
        if any(not r > 0 for r in v):
            raise ValueError("every distance must be > 0")
        return v

    @model_validator(mode="after")
    def check_distance_count(self) -> "SystemParams":
        """Distances must list one entry per client."""
        if len(self.distances) != self.num_clients:
            raise ValueError(f"expected {self.num_clients} distances, got {len(self.distances)}")
        return self

    @property
    def sum_r_alpha(self) -> float:
        """Sum over clients of r_i^alpha (rate of the minimum effective gain)."""
        return float(sum(r**self.path_loss_exponent for r in self.distances))

    @property
    def uniform_distance(self) -> bool:
        return len(set(self.distances)) == 1

    def with_num_clients(self, num_clients: int) -> "SystemParams":
        """Copy with a different client count; only uniform distances can be resized."""
        if num_clients == self.num_clients:
            return self
        if not self.uniform_distance:
            raise InvariantViolation("heterogeneous distances cannot be resized to a different client count")
        return self.model_copy(
            update={"num_clients": num_clients, "distances": (self.distances[0],) * num_clients}
        )

    def with_max_tx_power(self, max_tx_power: float) -> "SystemParams":
        """Copy with a different P0 (watts)."""
        return SystemParams.model_validate({**self.model_dump(), "max_tx_power": max_tx_power})


class PrivacyTarget(BaseModel):
    """Target (epsilon, delta) and clipping threshold S."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., gt=0)
    delta: float = Field(..., gt=0, lt=1)
    clip_threshold: float = Field(..., gt=0, description="S, same units as transmit symbols")
    clip_mode: ClipMode = ClipMode.FLAT

    def with_epsilon(self, epsilon: float) -> "PrivacyTarget":
        return PrivacyTarget.model_validate({**self.model_dump(), "epsilon": epsilon})


class TrainingConfig(BaseModel):
    """Federated training hyperparameters."""

    model_config = ConfigDict(frozen=True)

    hidden_layers: tuple[int, ...] = Field(default=(32,))
    activation: Activation = Activation.RELU
    learning_rate: float = Field(default=1.0e-3, gt=0)
    adam_beta1: float = Field(default=0.9, gt=0, lt=1)
    adam_beta2: float = Field(default=0.999, gt=0, lt=1)
    adam_epsilon: float = Field(default=1.0e-8, gt=0)
    batch_size: int = Field(default=32, ge=1)
    local_steps_per_round: int = Field(default=20, ge=0, description="Local epochs per round")
    rounds: int = Field(default=30, ge=0)
    client_weights: Optional[tuple[float, ...]] = Field(
        default=None, description="Per-client weights w_i; None means client data sizes"
    )
    dataset: DatasetKind = DatasetKind.MNIST
    mnist_dir: Optional[str] = None
    train_subset: Optional[int] = Field(default=6000, ge=1)
    test_subset: Optional[int] = Field(default=2000, ge=1)
    synth_samples: int = Field(default=6000, ge=1)
    synth_features: int = Field(default=20, ge=1)
    synth_classes: int = Field(default=3, ge=2)
    synth_test_samples: int = Field(default=2000, ge=1)

    @field_validator("hidden_layers")
    @classmethod
    def validate_hidden_layers(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(width < 1 for width in v):
            raise ValueError("layer widths must be positive")
        return v

    @field_validator("client_weights")
    @classmethod
    def validate_client_weights(cls, v: Optional[tuple[float, ...]]) -> Optional[tuple[float, ...]]:
        if v is not None and any(not w > 0 for w in v):
            raise ValueError("client weights must be positive")
        return v


class ExperimentConfig(BaseModel):
    """Sweep grids and run controls for the CLI subcommands."""

    model_config = ConfigDict(frozen=True)

    epsilon_grid: tuple[float, ...] = Field(default=(0.01, 0.1, 0.5, 0.95))
    num_clients_grid: tuple[int, ...] = Field(default=(5, 100))
    max_tx_power_dbm_grid: tuple[float, ...] = Field(default=(10.0,))
    num_trials: int = Field(default=100_000, ge=1)
    master_seed: int = Field(default=20210601, ge=0)
    output_path: str = "results/output.csv"
    policies: tuple[Policy, ...] = Field(default=(Policy.DP_STAR_STAR, Policy.CONVENTIONAL))
    symbol_mode: SymbolMode = SymbolMode.SATURATED

    @field_validator("epsilon_grid", "num_clients_grid", "max_tx_power_dbm_grid", "policies")
    @classmethod
    def validate_nonempty(cls, v: tuple) -> tuple:
        if not v:
            raise ValueError("grid must not be empty")
        return v

    @field_validator("epsilon_grid")
    @classmethod
    def validate_epsilons(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not e > 0 for e in v):
            raise ValueError("epsilon values must be > 0")
        return v

    @field_validator("num_clients_grid")
    @classmethod
    def validate_client_counts(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(n < 1 for n in v):
            raise ValueError("client counts must be >= 1")
        return v


class Scenario(NamedTuple):
    """Everything a scenario file defines; unpacks as (params, target, training, experiment)."""

    params: SystemParams
    target: PrivacyTarget
    training: TrainingConfig
    experiment: ExperimentConfig
