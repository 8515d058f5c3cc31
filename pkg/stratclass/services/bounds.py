"""Regret bounds for the mixture-feedback learner

Closed-form upper bounds on expected Stackelberg regret, evaluated with a
run's own constants. Used by ``validate`` and by sweeps to put measured
regret next to what the analysis guarantees.
"""

import math

from stratclass.services.costs import CostSpec
from stratclass.services.optimizer import Schedule
from stratclass.utils.norms import reciprocal


def regret_bound(schedule: Schedule, theta: float | None = None) -> float:
    """η/2·[nθ·d²M²/δ² + n(1−θ)·L²] + R²/(2η) + 3nLδ + nLRδ.

    θ defaults to the schedule's θ̂. Infinite when θ > 0 but δ = 0, since the
    learner then cannot handle strategic rounds at all.
    """
    theta = schedule.theta_hat if theta is None else theta
    n, d, R, M, L = schedule.n, schedule.d, schedule.R, schedule.M, schedule.L
    delta, eta = schedule.delta, schedule.eta
    if theta > 0.0 and delta == 0.0:
        return math.inf

    variance = n * (1.0 - theta) * L**2
    if theta > 0.0:
        variance += n * theta * d**2 * M**2 / delta**2
    return eta / 2.0 * variance + R**2 / (2.0 * eta) + 3.0 * n * L * delta + n * L * R * delta


def simplified_regret_bound(n: int, d: int, M: float, L: float, R: float, theta: float) -> float:
    """L·R·sqrt(n(1−θ)) + n^(3/4)·sqrt(dMLR(R+3))·θ^(1/4), the tuned-δ, tuned-η form."""
    return L * R * math.sqrt(n * (1.0 - theta)) + n**0.75 * math.sqrt(
        d * M * L * R * (R + 3.0)
    ) * theta**0.25


def relaxed_regret_bound(n: int, d: int, M: float, L: float, R: float, theta_hat: float) -> float:
    """Bound when only an upper estimate θ̂ ≥ θ is known.

    The second term covers short horizons n < (L/(dM))², where each round
    costs at most 2M.
    """
    return max(simplified_regret_bound(n, d, M, L, R, theta_hat), 2.0 * L**2 / (d**2 * M))


def smoothing_gap(L: float, delta: float) -> float:
    """|c̃(β) − c(β)| ≤ Lδ for an L-Lipschitz loss smoothed over a δ-ball."""
    return L * delta


def restriction_gap(n: int, L: float, R: float, delta: float) -> float:
    """Extra loss from optimising over K_δ instead of K: at most nLRδ."""
    return n * L * R * delta


def predicted_rate_exponent(theta: float, n: int | None = None, gamma: float | None = None) -> float:
    """Exponent of n in the regret rate.

    1/2 for θ = 0, (3 − γ)/4 when θ = O(n^−γ) (γ inferred from θ and n when
    only n is given), 3/4 for constant θ.
    """
    if theta == 0.0:
        return 0.5
    if gamma is None and n is not None and n > 1 and theta < 1.0:
        gamma = -math.log(theta) / math.log(n)
    if gamma is None:
        return 0.75
    return (3.0 - min(max(gamma, 0.0), 1.0)) / 4.0


def dimension_exponent(spec: CostSpec) -> float:
    """Power of d in the fully expanded rate: (s/q − s/2)_+ + 1/2."""
    return max(spec.s * reciprocal(spec.q) - spec.s / 2.0, 0.0) + 0.5
