from pydantic import BaseModel, Field, model_validator

from app.core.units import linear_to_db


class SnrBoundPoint(BaseModel):
    """Closed-form SNR/privacy tradeoff at one (epsilon, I) point."""

    epsilon: float = Field(..., gt=0)
    delta: float = Field(..., gt=0, lt=1.25)
    num_clients: int = Field(..., ge=1)
    max_tx_power: float = Field(..., gt=0, description="P0 in watts")
    g_th: float = Field(..., gt=0)
    exact_bound: float = Field(..., gt=0, description="Linear SNR upper bound")
    approx_bound: float = Field(..., gt=0, description="First-order approximation of the bound")
    expected_rho: float = Field(..., gt=0, description="Mean of rho** over fading")

    @model_validator(mode="after")
    def check_ordering(self) -> "SnrBoundPoint":
        """1 - exp(-x) <= x, so the exact bound never exceeds its approximation."""
        if self.exact_bound > self.approx_bound * (1 + 1e-12):
            raise ValueError("exact bound exceeds its first-order approximation")
        return self

    @property
    def exact_bound_db(self) -> float:
        return linear_to_db(self.exact_bound)

    @property
    def approx_bound_db(self) -> float:
        return linear_to_db(self.approx_bound)
