from typing import Optional

from pydantic import BaseModel, Field

from app.schemas.scenario import Policy, SymbolMode


class TradeoffPoint(BaseModel):
    """One sweep point of the tradeoff command."""

    epsilon: float = Field(..., gt=0)
    num_clients: int = Field(..., ge=1)
    max_tx_power_dbm: float
    policy: Policy


class TradeoffRow(BaseModel):
    """Closed-form bounds and measured SNR at one sweep point."""

    epsilon: float
    delta: float
    num_clients: int
    max_tx_power_dbm: float
    g_th: float
    exact_bound: float
    exact_bound_db: float
    approx_bound: float
    approx_bound_db: float
    expected_rho: float
    snr: float
    snr_db: float
    snr_stderr: float
    num_trials: int
    policy: Policy
    symbol_mode: SymbolMode


class TrainingCurveRequest(BaseModel):
    """One training curve: a policy at a client count."""

    num_clients: int = Field(..., ge=1)
    policy: Policy


class CheckResult(BaseModel):
    """Outcome of one validation check."""

    check: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

