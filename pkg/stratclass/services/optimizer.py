"""Projected subgradient descent with mixture feedback

Each round the learner deploys β⁺ = β + δ·S with S uniform on the unit sphere.
A truthful agent lets the learner compute an exact subgradient at β; a
strategic agent only reveals the loss value at β⁺, which is turned into the
one-point estimate (d/δ)·c(β⁺)·S of the gradient of the δ-smoothed loss.
Iterates live in K_δ, the ball of radius (1 − δ)·R, so every β⁺ stays in the
ball of radius R.

This module never sees agent internals: the learner is driven by
``Observation`` values (x̂, y) alone.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from stratclass.core.exceptions import ProtocolError, ScheduleInfeasible, ZeroSmoothingStrategicRound
from stratclass.services.losses import LossKind, nonstrategic_subgradient, observed_loss
from stratclass.utils.norms import project_onto_ball

logger = logging.getLogger(__name__)

SPHERE_TOL = 1e-12


@dataclass(frozen=True)
class Schedule:
    """Horizon, geometry and the derived smoothing radius δ and step size η."""

    n: int
    d: int
    R: float
    M: float
    L: float
    theta_hat: float
    delta: float
    eta: float

    @property
    def shrunk_radius(self) -> float:
        return (1.0 - self.delta) * self.R


@dataclass(frozen=True)
class NonStrategic:
    subgradient: np.ndarray


@dataclass(frozen=True)
class Strategic:
    loss_at_plus: float


Feedback = Union[NonStrategic, Strategic]


@dataclass
class OptimizerState:
    """Single-owner learner state; mutated in place by ``propose``/``update``."""

    beta: np.ndarray
    rng: np.random.Generator
    t: int = 0
    last_perturbation: np.ndarray | None = None
    proposed: bool = field(default=False, repr=False)

    @classmethod
    def initial(cls, schedule: Schedule, rng: np.random.Generator) -> "OptimizerState":
        # β₁ is the centre of K_δ
        return cls(beta=np.zeros(schedule.d), rng=rng)


def make_schedule(n: int, d: int, R: float, M: float, L: float, theta_hat: float) -> Schedule:
    """Derive δ and η from the horizon, the loss constants and θ̂.

    δ = θ̂^(1/4)·sqrt(dMR / (L(R + 3)))·n^(−1/4)
    η = R / sqrt(n·(θ̂·d²M²/δ² + (1 − θ̂)·L²))

    θ̂ = 0 gives δ = 0 and η = R/(L√n), plain online gradient descent.
    """
    if n < 1 or d < 1:
        raise ScheduleInfeasible(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not (R >= 1.0 and M > 0.0 and L > 0.0):
        raise ScheduleInfeasible(f"need R >= 1, M > 0, L > 0, got R={R}, M={M}, L={L}")
    if not 0.0 <= theta_hat <= 1.0:
        raise ScheduleInfeasible(f"theta_hat must lie in [0, 1], got {theta_hat}")

    if theta_hat == 0.0:
        delta = 0.0
        eta = R / (L * math.sqrt(n))
    else:
        delta = theta_hat**0.25 * math.sqrt(d * M * R / (L * (R + 3.0))) * n**-0.25
        if delta >= 1.0:
            raise ScheduleInfeasible(
                f"smoothing radius {delta:.4g} >= 1; horizon n={n} is too short for these constants"
            )
        eta = R / math.sqrt(n * (theta_hat * d**2 * M**2 / delta**2 + (1.0 - theta_hat) * L**2))

    schedule = Schedule(n=n, d=d, R=R, M=M, L=L, theta_hat=theta_hat, delta=delta, eta=eta)
    logger.debug("schedule derived: delta=%.6g eta=%.6g", delta, eta)
    return schedule


def sample_unit_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform direction on the unit sphere in R^d (normalised Gaussian)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    while True:
        g = rng.standard_normal(d)
        norm = float(np.linalg.norm(g))
        if norm > 0.0:
            return g / norm


def sample_unit_ball(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform point in the unit ball: a sphere direction scaled by U^(1/d)."""
    direction = sample_unit_sphere(rng, d)
    return direction * rng.random() ** (1.0 / d)


def one_point_estimate(loss_value: float, perturbation: np.ndarray, delta: float) -> np.ndarray:
    """(d/δ)·c(β + δS)·S, unbiased for the gradient of the δ-smoothed loss at β."""
    d = perturbation.shape[0]
    return (d / delta) * loss_value * perturbation


def propose(state: OptimizerState, schedule: Schedule) -> np.ndarray:
    """Draw S_t and return the deployed point β_t + δ·S_t."""
    state.proposed = True
    if schedule.delta == 0.0:
        state.last_perturbation = None
        return state.beta.copy()
    direction = sample_unit_sphere(state.rng, schedule.d)
    state.last_perturbation = direction
    return state.beta + schedule.delta * direction


def update(state: OptimizerState, schedule: Schedule, feedback: Feedback) -> OptimizerState:
    """Take the projected step β_{t+1} = Π_{K_δ}(β_t − η·g_t)."""
    if not state.proposed:
        raise ProtocolError("update called before propose in this round")

    if isinstance(feedback, Strategic):
        if schedule.delta == 0.0:
            raise ZeroSmoothingStrategicRound(
                f"strategic feedback in round {state.t + 1} with delta = 0; "
                "theta_hat is below the realized strategic fraction"
            )
        g = one_point_estimate(feedback.loss_at_plus, state.last_perturbation, schedule.delta)
    else:
        g = np.asarray(feedback.subgradient, dtype=float)

    state.beta = project_onto_ball(state.beta - schedule.eta * g, schedule.shrunk_radius)
    state.t += 1
    state.last_perturbation = None
    state.proposed = False
    return state


@dataclass(frozen=True)
class RoundOutcome:
    beta_plus: np.ndarray
    loss: float
    feedback: Feedback

    @property
    def feedback_kind(self) -> str:
        return "strategic" if isinstance(self.feedback, Strategic) else "nonstrategic"


class Learner:
    """The learner's side of the protocol.

    Sees only what an ``Observation`` carries (x̂, y) plus its own loss values.
    """

    def __init__(self, kind: LossKind, schedule: Schedule, rng: np.random.Generator):
        self.kind = kind
        self.schedule = schedule
        self.state = OptimizerState.initial(schedule, rng)
        self._beta_plus: np.ndarray | None = None

    @property
    def beta(self) -> np.ndarray:
        return self.state.beta

    def play(self) -> np.ndarray:
        """Commit to this round's classifier β⁺."""
        self._beta_plus = propose(self.state, self.schedule)
        return self._beta_plus

    def observe(self, observation) -> RoundOutcome:
        """Suffer the loss at β⁺, build the round's feedback and step."""
        if self._beta_plus is None:
            raise ProtocolError("observe called before play in this round")
        beta_plus = self._beta_plus
        loss = observed_loss(self.kind, observation.xhat, observation.y, beta_plus)

        if observation.y == 1:
            # truthful agent: x̂ = x, so the exact subgradient at β_t is available
            feedback: Feedback = NonStrategic(
                nonstrategic_subgradient(self.kind, observation.xhat, self.state.beta)
            )
        else:
            feedback = Strategic(loss)

        update(self.state, self.schedule, feedback)
        self._beta_plus = None
        return RoundOutcome(beta_plus=beta_plus, loss=loss, feedback=feedback)
