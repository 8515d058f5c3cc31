"""Norm utilities: p-norms, dual exponents and Euclidean ball projection"""

import math

import numpy as np


def dual_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1 (p = 1 pairs with q = inf and vice versa)."""
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp_norm(v: np.ndarray, p: float) -> np.ndarray | float:
    """p-norm along the last axis; accepts a single vector or a batch."""
    return np.linalg.norm(v, ord=p, axis=-1)


def reciprocal(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def norm_equivalence_factor(q: float, d: int) -> float:
    """Smallest c with ||x||_q <= c ||x||_2 for all x in R^d: d^((1/q - 1/2)_+)."""
    return float(d) ** max(reciprocal(q) - 0.5, 0.0)


def project_onto_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the centred ball of the given radius."""
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v
    return v * (radius / norm)
