"""Full-information baseline and numerical oracles

``hindsight_optimum`` finds the best fixed classifier for a whole agent
sequence, with every agent re-best-responding to it. The remaining functions
are brute-force oracles that certify the closed forms in ``costs`` and
``losses`` (grid suprema, numeric best responses, finite differences,
Monte-Carlo smoothing).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from stratclass.core.config import settings
from stratclass.core.exceptions import DegenerateDegree, DimensionTooLarge, NoConvergence
from stratclass.services.costs import (
    CostSpec,
    conjugate_subgradient,
    conjugate_value,
    cost_gradient,
    cost_value,
)
from stratclass.services.environment import AgentProfile, ground_truth_loss
from stratclass.services.losses import LossKind, link_derivative, link_value
from stratclass.services.optimizer import sample_unit_ball
from stratclass.utils.norms import norm_equivalence_factor, project_onto_ball

logger = logging.getLogger(__name__)

MAX_GRID_DIM = 3
BALL_TOL = 1e-12
ZOOM_CELLS = 10


@dataclass(frozen=True)
class HindsightSolution:
    beta_star: np.ndarray
    total_loss: float
    iterations: int
    certified_gap: float
    converged: bool = True
    rounds: int = 0


class AgentBatch:
    """Agents arranged for vectorised evaluation of F(β) = Σ_t c_t(β).

    Strategic agents sharing one cost form a group, so f*(β) and ∇f*(β) are
    computed once per group and per β.
    """

    def __init__(self, agents: Sequence[AgentProfile], d: int | None = None):
        self.n = len(agents)
        if d is None:
            d = int(np.shape(agents[0].x)[0]) if agents else 0
        self.d = d

        truthful = [agent.x for agent in agents if agent.y == 1]
        self.truthful = np.array(truthful, dtype=float).reshape(-1, d)

        grouped: dict[tuple, tuple[CostSpec, list[np.ndarray]]] = {}
        for agent in agents:
            if agent.y == 1:
                continue
            if agent.cost.degenerate:
                raise DegenerateDegree("the hindsight baseline needs every strategic cost to have r > 1")
            grouped.setdefault(agent.cost.key(), (agent.cost, []))[1].append(agent.x)
        self.groups = [(spec, np.array(xs, dtype=float)) for spec, xs in grouped.values()]

    def total_loss(self, kind: LossKind, beta: np.ndarray) -> float:
        total = float(np.sum(link_value(kind, self.truthful @ beta))) if len(self.truthful) else 0.0
        for spec, X in self.groups:
            z = -(X @ beta + spec.s * float(conjugate_value(spec, beta)))
            total += float(np.sum(link_value(kind, z)))
        return total

    def total_subgradient(self, kind: LossKind, beta: np.ndarray) -> np.ndarray:
        g = np.zeros(self.d)
        if len(self.truthful):
            g += self.truthful.T @ np.atleast_1d(link_derivative(kind, self.truthful @ beta))
        for spec, X in self.groups:
            z = -(X @ beta + spec.s * float(conjugate_value(spec, beta)))
            hp = np.atleast_1d(link_derivative(kind, z))
            g -= X.T @ hp + spec.s * float(np.sum(hp)) * conjugate_subgradient(spec, beta)
        return g

    def grid_losses(self, kind: LossKind, betas: np.ndarray) -> np.ndarray:
        """F at every row of ``betas``."""
        totals = np.zeros(betas.shape[0])
        if len(self.truthful):
            totals += np.sum(link_value(kind, betas @ self.truthful.T), axis=1)
        for spec, X in self.groups:
            fstar = np.atleast_1d(conjugate_value(spec, betas))
            z = -(betas @ X.T + spec.s * fstar[:, None])
            totals += np.sum(link_value(kind, z), axis=1)
        return totals

    def lipschitz(self, R: float) -> float:
        """Σ_t Lipschitz constant of c_t over the radius-R ball."""
        total = float(np.sum(np.linalg.norm(self.truthful, axis=1))) if len(self.truthful) else 0.0
        for spec, X in self.groups:
            C = norm_equivalence_factor(spec.q, spec.dim) / spec.eps
            per_agent = np.linalg.norm(X, axis=1) + spec.s * C**spec.s * R ** (spec.s - 1.0)
            total += float(np.sum(per_agent))
        return total


def total_loss(agents: Sequence[AgentProfile], kind: LossKind, beta) -> float:
    """Σ_t ground-truth loss of a fixed β, agent by agent."""
    beta = np.asarray(beta, dtype=float)
    return float(sum(ground_truth_loss(agent, kind, beta) for agent in agents))


def total_subgradient(agents: Sequence[AgentProfile], kind: LossKind, beta) -> np.ndarray:
    return AgentBatch(agents, d=np.shape(beta)[0]).total_subgradient(kind, np.asarray(beta, dtype=float))


class _Certificate:
    """Running lower bounds on min F over the ball, from subgradient cuts.

    Every cut F(β) ≥ F_k + ⟨g_k, β − β_k⟩ minimised over the ball gives
    F_k − ⟨g_k, β_k⟩ − R||g_k||; convex combinations of cuts (weights η_k,
    over all iterates and over the latest dyadic block) give more.
    """

    def __init__(self, R: float, d: int):
        self.R = R
        self.best_single = -math.inf
        self.all = [0.0, np.zeros(d), 0.0]
        self.tail = [0.0, np.zeros(d), 0.0]
        self.sum_eta = 0.0
        self.sum_eta2_g2 = 0.0

    def add(self, k: int, value: float, g: np.ndarray, beta: np.ndarray, eta: float) -> None:
        offset = value - float(g @ beta)
        self.best_single = max(self.best_single, offset - self.R * float(np.linalg.norm(g)))
        if k & (k - 1) == 0:
            self.tail = [0.0, np.zeros_like(g), 0.0]
        for acc in (self.all, self.tail):
            acc[0] += eta * offset
            acc[1] = acc[1] + eta * g
            acc[2] += eta
        self.sum_eta += eta
        self.sum_eta2_g2 += eta**2 * float(g @ g)

    def _aggregate(self, acc) -> float:
        if acc[2] == 0.0:
            return -math.inf
        return (acc[0] - self.R * float(np.linalg.norm(acc[1]))) / acc[2]

    def gap(self, best_value: float) -> float:
        lower = max(self.best_single, self._aggregate(self.all), self._aggregate(self.tail))
        cut_gap = best_value - lower
        telescoping = (
            (self.R**2 + self.sum_eta2_g2) / (2.0 * self.sum_eta) if self.sum_eta > 0.0 else math.inf
        )
        return max(0.0, min(cut_gap, telescoping))


def hindsight_optimum(
    agents: Sequence[AgentProfile],
    kind: LossKind,
    R: float,
    iterations: int | None = None,
    tol: float | None = None,
    d: int | None = None,
) -> HindsightSolution:
    """Best fixed β in the radius-R ball for the whole sequence.

    Projected subgradient descent from the origin with steps R/(G√k), G the
    largest subgradient norm seen so far, plus the η-weighted iterate
    average. Stops once the certified gap is at most tol·(1 + |F|).
    """
    iterations = settings.BASELINE_ITERATIONS if iterations is None else iterations
    tol = settings.BASELINE_TOL if tol is None else tol
    batch = AgentBatch(agents, d)
    if batch.n == 0:
        return HindsightSolution(beta_star=np.zeros(batch.d), total_loss=0.0, iterations=0, certified_gap=0.0)

    beta = np.zeros(batch.d)
    best_beta, best_value = beta.copy(), batch.total_loss(kind, beta)
    weighted = np.zeros(batch.d)
    certificate = _Certificate(R, batch.d)
    G = 0.0
    gap = math.inf
    k = 0

    for k in range(1, iterations + 1):
        value = batch.total_loss(kind, beta)
        g = batch.total_subgradient(kind, beta)
        if value < best_value:
            best_beta, best_value = beta.copy(), value

        g_norm = float(np.linalg.norm(g))
        if g_norm == 0.0:
            # zero subgradient: β is a global minimiser
            best_beta, best_value, gap = beta.copy(), value, 0.0
            break
        G = max(G, g_norm)
        eta = R / (G * math.sqrt(k))
        certificate.add(k, value, g, beta, eta)
        weighted += eta * beta
        beta = project_onto_ball(beta - eta * g, R)

        if k % settings.CHECK_INTERVAL == 0 or k == iterations:
            average = weighted / certificate.sum_eta
            average_value = batch.total_loss(kind, average)
            if average_value < best_value:
                best_beta, best_value = average, average_value
            gap = certificate.gap(best_value)
            logger.debug("baseline iteration %d: F=%.10g gap=%.3g", k, best_value, gap)
            if gap <= tol * (1.0 + abs(best_value)):
                break

    converged = gap <= tol * (1.0 + abs(best_value))
    if not converged:
        logger.warning(
            "baseline budget of %d iterations exhausted with certified gap %.3g", iterations, gap
        )
    solution = HindsightSolution(
        beta_star=best_beta,
        total_loss=total_loss(agents, kind, best_beta),
        iterations=k,
        certified_gap=gap,
        converged=converged,
        rounds=batch.n,
    )
    logger.info(
        "hindsight optimum: loss=%.10g gap=%.3g iterations=%d",
        solution.total_loss,
        solution.certified_gap,
        solution.iterations,
    )
    return solution


def grid_axis(R: float, resolution: float) -> np.ndarray:
    count = int(math.floor(2.0 * R / resolution + 1e-9))
    return -R + resolution * np.arange(count + 1)


def grid_hindsight_optimum(
    agents: Sequence[AgentProfile],
    kind: LossKind,
    R: float,
    resolution: float,
    d: int | None = None,
) -> HindsightSolution:
    """Exhaustive search over grid points in the ball (d ≤ 3).

    Points are visited in lexicographic order and only a strictly smaller
    loss replaces the incumbent, so ties go to the lexicographically smallest
    point. The gap is L_F·resolution·√d.
    """
    batch = AgentBatch(agents, d)
    if batch.d > MAX_GRID_DIM:
        raise DimensionTooLarge(f"grid search supports d <= {MAX_GRID_DIM}, got {batch.d}")
    if batch.n == 0:
        return HindsightSolution(beta_star=np.zeros(batch.d), total_loss=0.0, iterations=0, certified_gap=0.0)

    axis = grid_axis(R, resolution)
    if batch.d == 1:
        rest = np.zeros((1, 0))
    else:
        mesh = np.meshgrid(*([axis] * (batch.d - 1)), indexing="ij")
        rest = np.stack([m.ravel() for m in mesh], axis=1)

    best_beta, best_value, evaluated = None, math.inf, 0
    for first in axis:
        points = np.column_stack([np.full(rest.shape[0], first), rest])
        points = points[np.linalg.norm(points, axis=1) <= R + BALL_TOL]
        if not len(points):
            continue
        values = batch.grid_losses(kind, points)
        evaluated += len(points)
        i = int(np.argmin(values))
        if values[i] < best_value:
            best_beta, best_value = points[i].copy(), float(values[i])

    return HindsightSolution(
        beta_star=best_beta,
        total_loss=total_loss(agents, kind, best_beta),
        iterations=evaluated,
        certified_gap=batch.lipschitz(R) * resolution * math.sqrt(batch.d),
        rounds=batch.n,
    )


def default_conjugate_radius(spec: CostSpec, beta: np.ndarray) -> float:
    reach = 10.0 * float(np.linalg.norm(beta))
    if spec.degenerate:
        return reach
    return max(reach, 2.0 * float(np.linalg.norm(conjugate_subgradient(spec, beta))) + 1.0)


def grid_conjugate_value(
    spec: CostSpec,
    beta,
    radius: float | None = None,
    points: int = 201,
    refinements: int = 8,
) -> float:
    """Brute-force sup_w ⟨β, w⟩ − (1/r)||Aw||_p^r on a zooming grid (d ≤ 3).

    Starts on [−radius, radius]^d, by default max(10·||β||_2, 2·||∇f*(β)||_2 + 1)
    so the maximiser ∇f*(β) lies inside, and re-centres a grid
    ZOOM_CELLS cells wide around the incumbent at each refinement. Always a
    lower bound on f*(β).
    """
    beta = np.asarray(beta, dtype=float)
    if spec.dim > MAX_GRID_DIM:
        raise DimensionTooLarge(f"grid conjugate supports d <= {MAX_GRID_DIM}, got {spec.dim}")
    if not np.any(beta):
        return 0.0
    if radius is None:
        radius = default_conjugate_radius(spec, beta)

    origin = np.zeros(spec.dim)
    center, half, best = origin, radius, 0.0
    for _ in range(refinements + 1):
        offsets = np.linspace(-half, half, points)
        mesh = np.meshgrid(*([offsets] * spec.dim), indexing="ij")
        W = center + np.stack([m.ravel() for m in mesh], axis=1)
        values = W @ beta - cost_value(spec, origin, W)
        i = int(np.argmax(values))
        if values[i] > best:
            best = float(values[i])
        center = W[i]
        half = ZOOM_CELLS * (2.0 * half / (points - 1))
    return best


def numeric_best_response(spec: CostSpec, x, beta, steps: int = 10_000, tol: float = 1e-10) -> np.ndarray:
    """Gradient ascent with backtracking on u(x̂) = ⟨x̂, β⟩ − d(x̂, x), started at x.

    Returns once the utility is within ``tol`` of the closed-form supremum
    ⟨x, β⟩ + f*(β).
    """
    if spec.degenerate:
        raise DegenerateDegree("numeric best response needs r > 1")
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    target = float(x @ beta) + float(conjugate_value(spec, beta))

    def utility(z: np.ndarray) -> float:
        return float(z @ beta) - float(cost_value(spec, x, z))

    z, step = x.copy(), 1.0
    for _ in range(steps):
        u = utility(z)
        if target - u <= tol:
            return z
        g = beta - cost_gradient(spec, x, z)
        g2 = float(g @ g)
        if g2 == 0.0:
            break
        while step > 1e-16:
            candidate = z + step * g
            if utility(candidate) >= u + 0.5 * step * g2:
                break
            step *= 0.5
        else:
            break
        z = candidate
        step *= 2.0

    raise NoConvergence(f"utility gap {target - utility(z):.3g} above {tol:.3g} after {steps} steps")


def finite_difference_gradient(fn: Callable[[np.ndarray], float], beta, step: float = 1e-5) -> np.ndarray:
    """Central differences, one coordinate at a time."""
    beta = np.asarray(beta, dtype=float)
    grad = np.zeros_like(beta)
    for j in range(beta.shape[0]):
        e = np.zeros_like(beta)
        e[j] = step
        grad[j] = (fn(beta + e) - fn(beta - e)) / (2.0 * step)
    return grad


def smoothed_loss(
    fn: Callable[[np.ndarray], float], beta, delta: float, rng: np.random.Generator, samples: int
) -> tuple[float, float]:
    """Monte-Carlo c̃(β) = E_v[c(β + δv)], v uniform in the unit ball; returns (mean, stderr)."""
    beta = np.asarray(beta, dtype=float)
    values = np.array([fn(beta + delta * sample_unit_ball(rng, beta.shape[0])) for _ in range(samples)])
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


def smoothed_gradient(
    grad_fn: Callable[[np.ndarray], np.ndarray],
    beta,
    delta: float,
    rng: np.random.Generator,
    samples: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo ∇c̃(β) = E_v[∇c(β + δv)]; returns per-coordinate (mean, stderr)."""
    beta = np.asarray(beta, dtype=float)
    grads = np.array([grad_fn(beta + delta * sample_unit_ball(rng, beta.shape[0])) for _ in range(samples)])
    return grads.mean(axis=0), grads.std(axis=0, ddof=1) / math.sqrt(samples)

