"""Report schemas"""

from pydantic import BaseModel


class Checkpoint(BaseModel):
    """Regret of the first t rounds against the prefix hindsight optimum"""
    t: int
    cum_loss: float
    baseline_loss: float
    baseline_gap: float
    regret: float


class RegretReport(BaseModel):
    """Summary of one run, written as report.json"""
    n: int
    d: int
    theta_realized: float
    theta_hat: float
    delta: float
    eta: float
    M: float
    L: float
    C: float
    cum_loss: float
    baseline_loss: float
    baseline_gap: float
    regret: float
    checkpoints: list[Checkpoint] = []
    gamma_fit: float | None = None
    seed: int


class SweepRow(BaseModel):
    """One replicate of one sweep cell; failed cells carry ``error``"""
    cell: int
    replicate: int
    n: int
    theta: float
    theta_realized: float | None = None
    theta_hat: float | None = None
    cum_loss: float | None = None
    baseline_loss: float | None = None
    baseline_gap: float | None = None
    regret: float | None = None
    regret_bound: float | None = None
    simplified_bound: float | None = None
    error: str | None = None


class SweepCell(BaseModel):
    """Replicate statistics for one (θ, n) cell"""
    theta: float
    n: int
    replicates: int
    mean_regret: float | None = None
    std_regret: float | None = None
    regret_bound: float | None = None
    simplified_bound: float | None = None
    baseline_gap: float | None = None


class ThetaFit(BaseModel):
    """Log-log slope of mean regret against n at fixed θ"""
    theta: float
    gamma_fit: float | None = None
    predicted_exponent: float


class SweepSummary(BaseModel):
    """Aggregated sweep, written as sweep.json"""
    seed: int
    cells: list[SweepCell]
    fits: list[ThetaFit]
