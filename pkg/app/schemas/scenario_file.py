from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.scenario import Activation, ClipMode, DatasetKind, FadingMode, Policy, SymbolMode

LIST_FIELDS = (
    "distance_m",
    "hidden_layers",
    "client_weights",
    "epsilon_grid",
    "num_clients_grid",
    "max_tx_power_dbm_grid",
    "policies",
)


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",")]
        return tuple(item for item in items if item)
    if isinstance(value, (int, float)):
        return (value,)
    return value


def _on_off(value: Any) -> Any:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("on", "true", "yes", "1"):
            return True
        if lowered in ("off", "false", "no", "0"):
            return False
    return value


class ScenarioFile(BaseModel):
    """Raw scenario file: unit-suffixed keys, dB quantities as written by the user.

    Defaults are the reference evaluation settings.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Physical layer
    num_clients: int = Field(default=5, ge=1)
    distance_m: tuple[float, ...] = Field(default=(100.0,), description="Scalar or one entry per client")
    antenna_gain_dbi: float = 0.0
    ref_path_loss_db: float = -46.0
    path_loss_exponent: float = Field(default=2.0, ge=0)
    noise_power_dbm: float = -60.0
    max_tx_power_dbm: float = 10.0
    carrier_freq_hz: float = Field(default=5.0e9, gt=0)
    noise: bool = True
    fading: FadingMode = FadingMode.PER_ROUND

    # Privacy
    epsilon: float = Field(default=0.01, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    clip_threshold: float = Field(default=5.0e-5, gt=0)
    clipping: ClipMode = ClipMode.FLAT

    # Training
    hidden_layers: tuple[int, ...] = (32,)
    activation: Activation = Activation.RELU
    learning_rate: float = Field(default=1.0e-3, gt=0)
    adam_beta1: float = Field(default=0.9, gt=0, lt=1)
    adam_beta2: float = Field(default=0.999, gt=0, lt=1)
    adam_epsilon: float = Field(default=1.0e-8, gt=0)
    batch_size: int = Field(default=32, ge=1)
    local_epochs: int = Field(default=20, ge=0)
    rounds: int = Field(default=30, ge=0)
    client_weights: Optional[tuple[float, ...]] = None
    dataset: DatasetKind = DatasetKind.MNIST
    mnist_dir: Optional[str] = None
    train_subset: Optional[int] = Field(default=6000, ge=1)
    test_subset: Optional[int] = Field(default=2000, ge=1)
    synth_samples: int = Field(default=6000, ge=1)
    synth_features: int = Field(default=20, ge=1)
    synth_classes: int = Field(default=3, ge=2)
    synth_test_samples: int = Field(default=2000, ge=1)

    # Experiment
    epsilon_grid: tuple[float, ...] = (0.01, 0.1, 0.5, 0.95)
    num_clients_grid: tuple[int, ...] = (5, 100)
    max_tx_power_dbm_grid: tuple[float, ...] = (10.0,)
    num_trials: int = Field(default=100_000, ge=1)
    master_seed: int = Field(default=20210601, ge=0)
    output_path: str = "results/output.csv"
    policies: tuple[Policy, ...] = (Policy.DP_STAR_STAR, Policy.CONVENTIONAL)
    symbol_mode: SymbolMode = SymbolMode.SATURATED

    @field_validator(*LIST_FIELDS, mode="before")
    @classmethod
    def split_lists(cls, v: Any) -> Any:
        """Accept comma-separated strings and scalars for list keys."""
        return _split_list(v)

    @field_validator("noise", mode="before")
    @classmethod
    def parse_on_off(cls, v: Any) -> Any:
        """Accept on/off for the noise switch."""
        return _on_off(v)

    @field_validator("train_subset", "test_subset", "client_weights", "mnist_dir", mode="before")
    @classmethod
    def empty_as_none(cls, v: Any) -> Any:
        if v in ("", "none", "None", ()):
            return None
        return v
