"""Experiment configuration schemas"""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from stratclass.core.config import settings
from stratclass.core.exceptions import ConfigError
from stratclass.services.losses import LossKind


class CostFamilyConfig(BaseModel):
    """Manipulation cost of strategic agents in a stochastic stream"""
    p: float = 2.0
    r: float = 2.0
    A: list[list[float]] | None = None  # row-major; identity when omitted
    eps: float = 1.0
    randomize_transform: bool = False
    condition: float = Field(default=2.0, ge=1.0)


class StochasticStreamConfig(BaseModel):
    """Random stream parameters"""
    theta: float = Field(ge=0.0, le=1.0)
    sampler: Literal["ball", "mixture"] = "ball"
    separation: float = 0.5
    spread: float = Field(default=0.25, gt=0.0)
    clip: bool = True


class StreamConfig(BaseModel):
    """Exactly one of a scripted CSV file or stochastic parameters"""
    scripted: Path | None = None
    stochastic: StochasticStreamConfig | None = None

    @model_validator(mode="after")
    def exactly_one(self):
        if (self.scripted is None) == (self.stochastic is None):
            raise ValueError("stream needs exactly one of 'scripted' or 'stochastic'")
        return self


class BaselineConfig(BaseModel):
    """Hindsight baseline budget; None falls back to the settings"""
    iterations: int | None = Field(default=None, ge=1)
    tol: float | None = Field(default=None, gt=0.0)
    checkpoints: bool = True


class ExperimentConfig(BaseModel):
    """One experiment, as read from a ``"schema": 1`` JSON file"""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    schema_version: Literal[1] = Field(alias="schema")
    n: int | None = Field(default=None, ge=1)
    d: int = Field(ge=1)
    R1: float = Field(gt=0.0)
    R2: float = Field(ge=1.0)
    loss: LossKind = LossKind.LOGISTIC
    stream: StreamConfig
    cost: CostFamilyConfig = Field(default_factory=CostFamilyConfig)
    eps_floor: float | None = Field(default=None, gt=0.0)  # None: cost.eps
    theta_hat: float | Literal["auto"] = "auto"
    seed: int = Field(default=0, ge=0)
    replicates: int = Field(default_factory=lambda: settings.DEFAULT_REPLICATES, ge=1)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    output_dir: Path | None = None
    round_log: bool = True

    @model_validator(mode="after")
    def check_consistency(self):
        if isinstance(self.theta_hat, float) and not 0.0 <= self.theta_hat <= 1.0:
            raise ValueError(f"theta_hat must lie in [0, 1], got {self.theta_hat}")
        if self.cost.A is not None:
            rows = len(self.cost.A)
            if rows != self.d or any(len(row) != self.d for row in self.cost.A):
                raise ValueError(f"cost matrix A must be {self.d}x{self.d}")

        stochastic = self.stream.stochastic
        if stochastic is not None:
            if self.n is None:
                raise ValueError("a stochastic stream needs the horizon n")
            if isinstance(self.theta_hat, float) and self.theta_hat < stochastic.theta:
                raise ValueError(
                    f"theta_hat {self.theta_hat} is below the configured strategic fraction {stochastic.theta}"
                )
            if self.cost.eps < self.min_eps():
                raise ValueError(f"cost eps {self.cost.eps} is below eps_floor {self.eps_floor}")
        return self

    def min_eps(self) -> float:
        """Smallest singular-value floor any cost in the experiment may declare."""
        return self.cost.eps if self.eps_floor is None else self.eps_floor

    def transform(self) -> list[list[float]]:
        """Cost matrix A, row-major."""
        if self.cost.A is not None:
            return self.cost.A
        return [[1.0 if i == j else 0.0 for j in range(self.d)] for i in range(self.d)]

    def resolve_theta_hat(self, theta_realized: float) -> float:
        """θ̂ for the schedule: explicit value, or ``auto``.

        ``auto`` takes the exact fraction of a scripted stream and
        min(1, slack·θ) for a stochastic one.
        """
        if self.theta_hat != "auto":
            return float(self.theta_hat)
        if self.stream.stochastic is None:
            return theta_realized
        return min(1.0, settings.THETA_SLACK * self.stream.stochastic.theta)

    def with_cell(self, n: int, theta: float) -> "ExperimentConfig":
        """Copy with the horizon and the stochastic strategic fraction replaced."""
        if self.stream.stochastic is None:
            raise ConfigError("sweeps need a stochastic stream")
        stream = self.stream.model_copy(
            update={"stochastic": self.stream.stochastic.model_copy(update={"theta": theta})}
        )
        update: dict = {"n": n, "stream": stream}
        if isinstance(self.theta_hat, float) and self.theta_hat < theta:
            update["theta_hat"] = "auto"
        return self.model_copy(update=update)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON config; scripted paths resolve next to the file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc

    try:
        config = ExperimentConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(f"{path}: invalid config\n{exc}") from exc

    scripted = config.stream.scripted
    if scripted is not None and not scripted.is_absolute():
        stream = config.stream.model_copy(update={"scripted": path.parent / scripted})
        config = config.model_copy(update={"stream": stream})
    return config
