"""Classification losses under strategic manipulation

Every loss is c = h(y·⟨x̂, β⟩) with h the logistic or hinge link. Strategic
agents carry label −1 and report their best response, so their loss as a
function of β is h(−(⟨x, β⟩ + s·f*(β))) and stays convex in β.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy.special import expit

from stratclass.core.exceptions import DegenerateDegree
from stratclass.services.costs import CostSpec, conjugate_subgradient, conjugate_value
from stratclass.utils.norms import norm_equivalence_factor


class LossKind(str, Enum):
    LOGISTIC = "logistic"
    HINGE = "hinge"


@dataclass(frozen=True)
class LossConstants:
    """Bounds on |c| (M) and its 2-norm Lipschitz constant (L) over ||β||_2 ≤ R2."""

    M: float
    L: float
    C: float
    R1: float
    R2: float

    def __post_init__(self):
        if not (self.M >= 1.0 and self.L > 0.0 and self.C > 0.0 and self.R2 >= 1.0):
            raise ValueError(f"inconsistent loss constants: {self}")


def link_value(kind: LossKind | str, z):
    """h(z): log(1 + e^{-z}) or (1 − z)_+. Vectorised."""
    z = np.asarray(z, dtype=float)
    if LossKind(kind) is LossKind.LOGISTIC:
        # finite for |z| in the thousands
        out = np.logaddexp(0.0, -z)
    else:
        out = np.maximum(1.0 - z, 0.0)
    return float(out) if out.ndim == 0 else out


def link_derivative(kind: LossKind | str, z):
    """h′(z); the hinge kink at z = 1 gets derivative 0."""
    z = np.asarray(z, dtype=float)
    if LossKind(kind) is LossKind.LOGISTIC:
        out = -expit(-z)
    else:
        out = np.where(z < 1.0, -1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def observed_loss(kind: LossKind, xhat, y: int, beta) -> float:
    """Loss computed from what the learner sees: h(y·⟨x̂, β⟩)."""
    return link_value(kind, y * float(np.dot(xhat, beta)))


def _strategic_margin(spec: CostSpec, x, beta) -> float:
    if spec.degenerate:
        raise DegenerateDegree("closed-form strategic loss needs r > 1")
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return -(float(x @ beta) + spec.s * float(conjugate_value(spec, beta)))


def strategic_loss_closed_form(spec: CostSpec, kind: LossKind, x, beta) -> float:
    """h(−(⟨x, β⟩ + s·f*(β))), the loss a label −1 agent causes after best-responding."""
    return link_value(kind, _strategic_margin(spec, x, beta))


def nonstrategic_subgradient(kind: LossKind, x, beta) -> np.ndarray:
    """Element of ∂_β h(⟨x, β⟩) for a label +1 agent (x̂ = x)."""
    x = np.asarray(x, dtype=float)
    return link_derivative(kind, float(x @ np.asarray(beta, dtype=float))) * x


def strategic_exact_subgradient(spec: CostSpec, kind: LossKind, x, beta) -> np.ndarray:
    """Chain rule on h(−(⟨x, β⟩ + s·f*(β))): −h′(z)·(x + s·∇f*(β))."""
    z = _strategic_margin(spec, x, beta)
    x = np.asarray(x, dtype=float)
    return -link_derivative(kind, z) * (x + spec.s * conjugate_subgradient(spec, beta))


def constants(spec: CostSpec, kind: LossKind, R1: float, R2: float) -> LossConstants:
    """M and L for ||x||_2 ≤ R1, ||β||_2 ≤ R2.

    C = ε⁻¹·d^((1/q − 1/2)_+) bounds the dual norm by the 2-norm; both links
    satisfy 0 ≤ h(z) ≤ 1 + |z| and |h′| ≤ 1, which gives
    M = 1 + R1·R2 + C^s·R2^s and L = R1 + s·C^s·R2^(s−1).
    """
    if spec.degenerate:
        raise DegenerateDegree("loss constants need r > 1")
    if not (R1 > 0.0 and R2 >= 1.0):
        raise ValueError(f"need R1 > 0 and R2 >= 1, got R1={R1}, R2={R2}")
    C = norm_equivalence_factor(spec.q, spec.dim) / spec.eps
    s = spec.s
    M = 1.0 + R1 * R2 + C**s * R2**s
    L = R1 + s * C**s * R2 ** (s - 1.0)
    return LossConstants(M=M, L=L, C=C, R1=R1, R2=R2)


def nonstrategic_constants(R1: float, R2: float) -> LossConstants:
    """Constants when every agent reports truthfully."""
    return LossConstants(M=1.0 + R1 * R2, L=R1, C=1.0, R1=R1, R2=R2)


def experiment_constants(
    specs: Iterable[CostSpec], kind: LossKind, R1: float, R2: float
) -> LossConstants:
    """Largest M, L and C over the distinct costs present in a stream.

    Degree-1 costs leave the truthful bounds in place: their agents only
    move when the response is unbounded.
    """
    worst = nonstrategic_constants(R1, R2)
    for spec in specs:
        if spec.degenerate:
            continue
        c = constants(spec, kind, R1, R2)
        worst = LossConstants(
            M=max(worst.M, c.M), L=max(worst.L, c.L), C=max(worst.C, c.C), R1=R1, R2=R2
        )
    return worst
