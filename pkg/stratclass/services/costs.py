"""Agent manipulation costs and their convex conjugates

A strategic agent at true features x pays d(x̂, x) = (1/r)·||A(x̂ − x)||_p^r to
report x̂. With B = (Aᵀ)⁻¹ and the dual pair 1/p + 1/q = 1, 1/r + 1/s = 1 the
conjugate of w ↦ (1/r)||Aw||_p^r is f*(β) = (1/s)·||Bβ||_q^s, and the agent's
best response to a deployed β is x + ∂f*(β).

p ∈ {1, ∞} makes the dual norm nondifferentiable; a fixed tie-break picks the
subgradient (see ``conjugate_subgradient``).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svdvals

from stratclass.core.exceptions import (
    DegenerateDegree,
    DimensionMismatch,
    InvalidExponent,
    SingularTransform,
    UnboundedResponse,
)
from stratclass.utils.norms import dual_exponent, lp_norm, reciprocal

EXPONENT_TOL = 1e-12
INVERSE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Validated manipulation cost (1/r)||A(x̂ − x)||_p^r.

    ``s`` is ``inf`` when r = 1 (the conjugate is then an indicator of the
    dual unit ball).
    """

    p: float
    r: float
    A: np.ndarray
    eps: float
    q: float
    s: float
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def degenerate(self) -> bool:
        return self.r == 1.0

    def key(self) -> tuple:
        """Hashable identity used to group agents sharing one cost."""
        return (self.p, self.r, self.eps, self.A.tobytes())


@dataclass(frozen=True)
class BestResponse:
    xhat: np.ndarray
    inner: float


def make_cost_spec(p: float, r: float, A, eps: float) -> CostSpec:
    """Validate (p, r, A, ε) and cache the dual exponents and (Aᵀ)⁻¹."""
    p = float(p)
    r = float(r)
    if not p >= 1.0:
        raise InvalidExponent(f"norm exponent p must be >= 1, got {p}")
    if not (r >= 1.0 and math.isfinite(r)):
        raise InvalidExponent(f"cost power r must be a finite value >= 1, got {r}")
    if not eps > 0.0:
        raise SingularTransform(f"singular-value floor must be positive, got {eps}")

    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"transform must be a square matrix, got shape {A.shape}")

    sigma_min = float(svdvals(A).min())
    if sigma_min < eps:
        raise SingularTransform(
            f"smallest singular value {sigma_min:.3g} is below the floor {eps:.3g}; "
            "the agent could move for free along a null direction"
        )

    q = dual_exponent(p)
    s = math.inf if r == 1.0 else r / (r - 1.0)
    if abs(reciprocal(p) + reciprocal(q) - 1.0) > EXPONENT_TOL:
        raise InvalidExponent(f"p={p} and q={q} are not dual")
    if r > 1.0 and abs(1.0 / r + 1.0 / s - 1.0) > EXPONENT_TOL:
        raise InvalidExponent(f"r={r} and s={s} are not dual")

    B = np.linalg.inv(A.T)
    if np.max(np.abs(B @ A.T - np.eye(A.shape[0]))) > INVERSE_TOL:
        raise SingularTransform("transform is too ill-conditioned to invert accurately")

    A.setflags(write=False)
    B.setflags(write=False)
    return CostSpec(p=p, r=r, A=A, eps=float(eps), q=q, s=s, B=B)


def _check_dim(spec: CostSpec, *vectors: np.ndarray) -> None:
    for v in vectors:
        if np.shape(v)[-1] != spec.dim:
            raise DimensionMismatch(
                f"expected vectors of dimension {spec.dim}, got shape {np.shape(v)}"
            )


def cost_value(spec: CostSpec, x, xhat):
    """(1/r)||A(x̂ − x)||_p^r; ``xhat`` may be a batch along the leading axes."""
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    _check_dim(spec, x, xhat)
    w = (xhat - x) @ spec.A.T
    return lp_norm(w, spec.p) ** spec.r / spec.r


def cost_gradient(spec: CostSpec, x, xhat) -> np.ndarray:
    """Gradient in x̂ of (1/r)||A(x̂ − x)||_p^r (same tie-break as the conjugate at p ∈ {1, ∞})."""
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    _check_dim(spec, x, xhat)
    w = spec.A @ (xhat - x)
    norm = float(lp_norm(w, spec.p))
    if norm == 0.0:
        return np.zeros(spec.dim)

    if math.isinf(spec.p):
        i = int(np.argmax(np.abs(w)))
        g = np.zeros(spec.dim)
        g[i] = np.sign(w[i]) * norm ** (spec.r - 1.0)
    elif spec.p == 1.0:
        g = norm ** (spec.r - 1.0) * np.sign(w)
    else:
        g = norm ** (spec.r - spec.p) * np.sign(w) * np.abs(w) ** (spec.p - 1.0)
    return spec.A.T @ g


def dual_norm(spec: CostSpec, beta):
    """||Bβ||_q, the norm dual to w ↦ ||Aw||_p."""
    beta = np.asarray(beta, dtype=float)
    _check_dim(spec, beta)
    return lp_norm(beta @ spec.B.T, spec.q)


def conjugate_value(spec: CostSpec, beta):
    """f*(β) = (1/s)||Bβ||_q^s; ``beta`` may be a batch along the leading axes."""
    if spec.degenerate:
        raise DegenerateDegree("conjugate of a degree-1 cost is an indicator; use best_response")
    return dual_norm(spec, beta) ** spec.s / spec.s


def conjugate_subgradient(spec: CostSpec, beta) -> np.ndarray:
    """One element of ∂f*(β).

    With u = Bβ the returned vector is Bᵀ·∇(1/s)||u||_q^s. At q = ∞ the whole
    mass goes to the smallest index attaining max|u_i|; at q = 1 coordinates
    with u_i = 0 get 0. Both choices are valid subgradients and keep the
    response deterministic.
    """
    if spec.degenerate:
        raise DegenerateDegree("conjugate of a degree-1 cost has no finite subgradient map")
    beta = np.asarray(beta, dtype=float)
    _check_dim(spec, beta)

    u = spec.B @ beta
    norm = float(lp_norm(u, spec.q))
    if norm == 0.0:
        return np.zeros(spec.dim)

    if math.isinf(spec.q):
        i = int(np.argmax(np.abs(u)))
        g = np.zeros(spec.dim)
        g[i] = np.sign(u[i]) * norm ** (spec.s - 1.0)
    elif spec.q == 1.0:
        g = norm ** (spec.s - 1.0) * np.sign(u)
    else:
        g = norm ** (spec.s - spec.q) * np.sign(u) * np.abs(u) ** (spec.q - 1.0)
    return spec.B.T @ g


def best_response(spec: CostSpec, x, beta) -> BestResponse:
    """Utility-maximising report x̂ against β, with ⟨x̂, β⟩ in closed form.

    For r > 1 the inner product is ⟨x, β⟩ + s·f*(β) by Euler's identity, so it
    does not depend on the subgradient picked. For r = 1 the agent stays put
    while ||Bβ||_q ≤ 1 and can gain without bound otherwise.
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    _check_dim(spec, x, beta)

    if spec.degenerate:
        gain = float(dual_norm(spec, beta))
        if gain > 1.0:
            raise UnboundedResponse(
                f"dual norm {gain:.6g} > 1: agent utility is unbounded for this classifier"
            )
        return BestResponse(xhat=x.copy(), inner=float(x @ beta))

    move = conjugate_subgradient(spec, beta)
    inner = float(x @ beta) + spec.s * float(conjugate_value(spec, beta))
    return BestResponse(xhat=x + move, inner=inner)
