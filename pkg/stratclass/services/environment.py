"""Agents and the interaction protocol

Holds the hidden agent profiles, answers each deployed classifier with the
agent's report, and evaluates full-information losses for the baseline. The
learner only ever receives an ``Observation``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from stratclass.core.exceptions import ConfigError, DimensionMismatch
from stratclass.services.costs import CostSpec, best_response, make_cost_spec
from stratclass.services.losses import LossKind, observed_loss, strategic_loss_closed_form
from stratclass.services.optimizer import sample_unit_ball
from stratclass.utils.norms import project_onto_ball
from stratclass.utils.rng import stream_generator

logger = logging.getLogger(__name__)

RADIUS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AgentProfile:
    """One round's agent: true features, label, and (for label −1) a cost."""

    x: np.ndarray
    y: int
    cost: CostSpec | None = None

    def __post_init__(self):
        if self.y not in (1, -1):
            raise ConfigError(f"label must be +1 or -1, got {self.y}")
        if self.y == -1 and self.cost is None:
            raise ConfigError("a label -1 agent needs a cost")
        if self.y == 1 and self.cost is not None:
            raise ConfigError("a label +1 agent does not manipulate and takes no cost")
        if self.cost is not None and self.cost.dim != np.shape(self.x)[0]:
            raise DimensionMismatch(
                f"cost dimension {self.cost.dim} does not match features {np.shape(self.x)}"
            )


@dataclass(frozen=True)
class Observation:
    """What crosses to the learner: the reported features and the label."""

    xhat: np.ndarray
    y: int


@dataclass(frozen=True)
class CostFamily:
    """Cost assigned to strategic agents of a stochastic stream.

    With ``randomize_transform`` every strategic agent gets its own
    A_t = U·diag(σ)·Vᵀ, U and V Haar-random, σ uniform in [ε, κ·ε].
    """

    p: float
    r: float
    A: np.ndarray
    eps: float
    randomize_transform: bool = False
    condition: float = 2.0

    def base_spec(self) -> CostSpec:
        return make_cost_spec(self.p, self.r, self.A, self.eps)

    def draw(self, rng: np.random.Generator, base: CostSpec) -> CostSpec:
        if not self.randomize_transform:
            return base
        d = base.dim
        u, _ = np.linalg.qr(rng.standard_normal((d, d)))
        v, _ = np.linalg.qr(rng.standard_normal((d, d)))
        sigma = rng.uniform(self.eps, self.condition * self.eps, size=d)
        return make_cost_spec(self.p, self.r, u @ np.diag(sigma) @ v.T, self.eps)


@dataclass(frozen=True)
class ScriptedStream:
    profiles: tuple[AgentProfile, ...]
    d: int | None = None
    R1: float | None = None


@dataclass(frozen=True)
class StochasticStream:
    """Oblivious random stream: each round is strategic with probability θ.

    ``sampler`` is ``"ball"`` (x uniform in the R1 ball, label-independent) or
    ``"mixture"`` (Gaussian clusters at ±separation·e₁ by label, spread
    ``spread``; points outside the R1 ball are clipped or redrawn).
    """

    n: int
    d: int
    R1: float
    theta: float
    cost_family: CostFamily
    seed: int
    cell: int = 0
    sampler: str = "ball"
    separation: float = 0.5
    spread: float = 0.25
    clip: bool = True


@dataclass(frozen=True)
class RealizedStream:
    profiles: tuple[AgentProfile, ...] = field(default_factory=tuple)
    theta_realized: float = 0.0

    def __len__(self) -> int:
        return len(self.profiles)

    def distinct_costs(self) -> list[CostSpec]:
        seen: dict[tuple, CostSpec] = {}
        for agent in self.profiles:
            if agent.cost is not None:
                seen.setdefault(agent.cost.key(), agent.cost)
        return list(seen.values())


def respond(agent: AgentProfile, beta) -> Observation:
    """The agent's report to the deployed β: truthful for +1, best response for −1."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != np.shape(agent.x):
        raise DimensionMismatch(f"classifier shape {beta.shape} vs features {np.shape(agent.x)}")
    if agent.y == 1:
        return Observation(xhat=np.array(agent.x, dtype=float), y=1)
    return Observation(xhat=best_response(agent.cost, agent.x, beta).xhat, y=-1)


def ground_truth_loss(agent: AgentProfile, kind: LossKind, beta) -> float:
    """Loss of β on this agent when the agent best-responds to β itself."""
    if agent.y == 1:
        return observed_loss(kind, agent.x, 1, beta)
    return strategic_loss_closed_form(agent.cost, kind, agent.x, beta)


def strategic_fraction(profiles) -> float:
    """θ = #{t : y_t = −1} / n (0 for an empty stream)."""
    if not profiles:
        return 0.0
    return sum(1 for agent in profiles if agent.y == -1) / len(profiles)


def check_profiles(profiles, d: int, R1: float) -> None:
    for t, agent in enumerate(profiles, start=1):
        if np.shape(agent.x) != (d,):
            raise ConfigError(f"agent {t} has features of shape {np.shape(agent.x)}, expected ({d},)")
        if np.linalg.norm(agent.x) > R1 + RADIUS_TOL:
            raise ConfigError(f"agent {t} violates ||x||_2 <= R1 = {R1}")


def _draw_features(stream: StochasticStream, rng: np.random.Generator, y: int) -> np.ndarray:
    if stream.sampler == "ball":
        return stream.R1 * sample_unit_ball(rng, stream.d)
    if stream.sampler != "mixture":
        raise ConfigError(f"unknown feature sampler {stream.sampler!r}")

    center = np.zeros(stream.d)
    center[0] = y * stream.separation
    while True:
        x = center + stream.spread * rng.standard_normal(stream.d)
        if stream.clip:
            return project_onto_ball(x, stream.R1)
        if np.linalg.norm(x) <= stream.R1:
            return x


def realize_stream(stream: ScriptedStream | StochasticStream, rng: np.random.Generator | None = None):
    """Materialise the whole agent sequence before the first round.

    Stochastic streams are driven by their own generator, derived from the
    stream seed unless one is passed in; nothing here depends on the learner.
    """
    if isinstance(stream, ScriptedStream):
        profiles = tuple(stream.profiles)
        if stream.d is not None and stream.R1 is not None:
            check_profiles(profiles, stream.d, stream.R1)
        return RealizedStream(profiles=profiles, theta_realized=strategic_fraction(profiles))

    if not 0.0 <= stream.theta <= 1.0:
        raise ConfigError(f"strategic probability must lie in [0, 1], got {stream.theta}")
    if stream.cost_family.A.shape != (stream.d, stream.d):
        raise ConfigError(
            f"cost transform has shape {stream.cost_family.A.shape}, expected ({stream.d}, {stream.d})"
        )
    rng = rng if rng is not None else stream_generator(stream.seed, stream.cell)
    base = stream.cost_family.base_spec() if stream.theta > 0.0 else None

    profiles = []
    for _ in range(stream.n):
        strategic = rng.random() < stream.theta
        y = -1 if strategic else 1
        x = _draw_features(stream, rng, y)
        cost = stream.cost_family.draw(rng, base) if strategic else None
        profiles.append(AgentProfile(x=x, y=y, cost=cost))

    profiles = tuple(profiles)
    realized = RealizedStream(profiles=profiles, theta_realized=strategic_fraction(profiles))
    logger.info(
        "stream realized: n=%d theta=%.4f realized=%.4f", stream.n, stream.theta, realized.theta_realized
    )
    return realized
