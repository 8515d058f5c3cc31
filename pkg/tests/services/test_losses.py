"""Loss, subgradient and loss-constant tests"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.special import expit

from stratclass.core.exceptions import DegenerateDegree
from stratclass.services.baseline import finite_difference_gradient
from stratclass.services.costs import best_response, make_cost_spec
from stratclass.services.losses import (
    LossConstants,
    LossKind,
    constants,
    experiment_constants,
    link_derivative,
    link_value,
    nonstrategic_constants,
    nonstrategic_subgradient,
    observed_loss,
    strategic_exact_subgradient,
    strategic_loss_closed_form,
)
from stratclass.services.optimizer import sample_unit_ball
from tests.strategies import SEEDS, cost_specs, random_vector, well_conditioned

KINDS = st.sampled_from(list(LossKind))


def test_link_values():
    """Test the links at their reference points"""
    assert link_value(LossKind.LOGISTIC, 0.0) == pytest.approx(math.log(2))
    assert link_value(LossKind.HINGE, 1.0) == 0.0
    assert link_value(LossKind.HINGE, -4.0) == 5.0


def test_links_accept_plain_names():
    """Test config strings select the same link as the enum and unknown names are refused"""
    assert link_value("logistic", 0.0) == pytest.approx(math.log(2))
    assert link_value("hinge", -4.0) == 5.0
    assert link_derivative("logistic", 0.0) == pytest.approx(-0.5)
    assert observed_loss("logistic", np.zeros(2), 1, np.array([3.0, -1.0])) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        link_value("squared", 0.0)


def test_logistic_is_overflow_safe():
    """Test |z| in the thousands stays finite"""
    assert link_value(LossKind.LOGISTIC, -2000.0) == pytest.approx(2000.0)
    assert link_value(LossKind.LOGISTIC, 2000.0) == pytest.approx(0.0, abs=1e-300)
    assert link_derivative(LossKind.LOGISTIC, -2000.0) == pytest.approx(-1.0)


def test_link_is_vectorised():
    """Test arrays in, arrays out"""
    values = link_value(LossKind.HINGE, np.array([-1.0, 0.5, 3.0]))
    np.testing.assert_allclose(values, [2.0, 0.5, 0.0])


def test_hinge_kink_derivative_is_zero():
    """Test the hinge derivative at z = 1 is taken as 0"""
    assert link_derivative(LossKind.HINGE, 1.0) == 0.0
    assert link_derivative(LossKind.HINGE, 0.999) == -1.0


def test_observed_loss_examples():
    """Test the learner-side loss on hand-computed cases"""
    assert observed_loss(LossKind.HINGE, [1, 2], -1, [0, 2]) == 5.0
    assert observed_loss(LossKind.LOGISTIC, [0, 0], 1, [3, -7]) == pytest.approx(math.log(2))
    assert observed_loss(LossKind.HINGE, [1, 0], 1, [2, 0]) == 0.0


def test_strategic_loss_examples(identity_spec):
    """Test the closed-form strategic loss on hand-computed cases"""
    assert strategic_loss_closed_form(identity_spec, LossKind.HINGE, [1, 0], [-0.5, 0]) == pytest.approx(0.75)
    assert strategic_loss_closed_form(identity_spec, LossKind.LOGISTIC, [0.3, 0.9], [0, 0]) == pytest.approx(
        math.log(2)
    )
    assert strategic_loss_closed_form(identity_spec, LossKind.HINGE, [0, 0], [0, 2]) == pytest.approx(5.0)


def test_strategic_loss_needs_positive_degree():
    """Test the closed form refuses r = 1"""
    spec = make_cost_spec(2, 1, np.eye(2), 0.5)
    with pytest.raises(DegenerateDegree):
        strategic_loss_closed_form(spec, LossKind.HINGE, [0, 0], [0.1, 0])


def test_nonstrategic_subgradient_examples():
    """Test truthful-agent subgradients on hand-computed cases"""
    np.testing.assert_allclose(nonstrategic_subgradient(LossKind.LOGISTIC, [1, 0], [0, 0]), [-0.5, 0])
    np.testing.assert_allclose(nonstrategic_subgradient(LossKind.HINGE, [1, 0], [2, 0]), [0, 0])
    np.testing.assert_allclose(nonstrategic_subgradient(LossKind.HINGE, [1, 1], [0, 0]), [-1, -1])


def test_strategic_subgradient_examples(identity_spec):
    """Test strategic subgradients on hand-computed cases"""
    g = strategic_exact_subgradient(identity_spec, LossKind.HINGE, [1, 0], [-0.5, 0])
    np.testing.assert_allclose(g, [0, 0], atol=1e-15)

    g = strategic_exact_subgradient(identity_spec, LossKind.LOGISTIC, [0, 0], [0, 0])
    np.testing.assert_array_equal(g, [0, 0])

    g = strategic_exact_subgradient(identity_spec, LossKind.LOGISTIC, [1, 0], [1, 0])
    np.testing.assert_allclose(g, [3 * expit(2.0), 0])
    assert g[0] == pytest.approx(2.6424, abs=1e-4)


def test_strategic_subgradient_matches_finite_differences(identity_spec):
    """Test the stationary point and the logistic example numerically"""
    for kind, beta in ((LossKind.HINGE, [-0.5, 0]), (LossKind.LOGISTIC, [1, 0])):
        analytic = strategic_exact_subgradient(identity_spec, kind, [1, 0], beta)
        numeric = finite_difference_gradient(
            lambda b: strategic_loss_closed_form(identity_spec, kind, [1, 0], b), beta
        )
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)


@pytest.mark.parametrize(
    "p, eps, d, R1, R2, expected",
    [
        (2.0, 1.0, 2, 1.0, 2.0, (1.0, 7.0, 5.0)),
        (2.0, 0.5, 2, 1.0, 2.0, (2.0, 19.0, 17.0)),
        (math.inf, 1.0, 4, 1.0, 1.0, (2.0, 6.0, 9.0)),
    ],
)
def test_constants_examples(p, eps, d, R1, R2, expected):
    """Test C, M, L against hand-computed plug-ins"""
    spec = make_cost_spec(p, 2, np.eye(d), eps)
    c = constants(spec, LossKind.LOGISTIC, R1, R2)
    assert (c.C, c.M, c.L) == pytest.approx(expected)


def test_constants_need_positive_degree():
    """Test constants refuse r = 1"""
    with pytest.raises(DegenerateDegree):
        constants(make_cost_spec(2, 1, np.eye(2), 0.5), LossKind.HINGE, 1.0, 2.0)


def test_constants_reject_inconsistent_values():
    """Test M < 1 is not a valid set of constants"""
    with pytest.raises(ValueError):
        LossConstants(M=0.5, L=1.0, C=1.0, R1=1.0, R2=1.0)


def test_experiment_constants_take_the_worst_cost():
    """Test the experiment-level constants cover every cost present"""
    cheap = make_cost_spec(2, 2, np.eye(2), 1.0)
    dear = make_cost_spec(2, 2, np.eye(2) * 0.5, 0.5)
    degenerate = make_cost_spec(2, 1, np.eye(2), 0.5)
    worst = experiment_constants([cheap, dear, degenerate], LossKind.HINGE, 1.0, 2.0)
    assert (worst.C, worst.M, worst.L) == pytest.approx((2.0, 19.0, 17.0))
    assert experiment_constants([], LossKind.HINGE, 1.0, 2.0) == nonstrategic_constants(1.0, 2.0)


@pytest.mark.parametrize(
    "p, d, R1, R2",
    [(2.0, 2, 1.0, 2.0), (math.inf, 4, 1.0, 1.0)],
)
@pytest.mark.parametrize("kind", list(LossKind))
def test_constants_bound_sampled_losses(p, d, R1, R2, kind, rng):
    """Test |c| ≤ M and Lipschitz ratios ≤ L over 10⁴ samples"""
    spec = make_cost_spec(p, 2, np.eye(d), 1.0)
    c = constants(spec, kind, R1, R2)
    worst_value, worst_ratio = 0.0, 0.0
    for _ in range(10_000):
        x = R1 * sample_unit_ball(rng, d)
        b1 = R2 * sample_unit_ball(rng, d)
        b2 = R2 * sample_unit_ball(rng, d)
        v1 = strategic_loss_closed_form(spec, kind, x, b1)
        v2 = strategic_loss_closed_form(spec, kind, x, b2)
        worst_value = max(worst_value, abs(v1), abs(v2))
        worst_ratio = max(worst_ratio, abs(v1 - v2) / np.linalg.norm(b1 - b2))
    assert worst_value <= c.M
    assert worst_ratio <= c.L * (1 + 1e-6)


@settings(max_examples=200, deadline=None)
@given(spec=cost_specs(), kind=KINDS, seed=SEEDS)
def test_observed_loss_after_response_matches_closed_form(spec, kind, seed):
    """Test the learner-side loss of a best response equals the closed form"""
    rng = np.random.default_rng(seed)
    x = random_vector(rng, spec.dim, 1.0)
    beta = random_vector(rng, spec.dim, 2.0)
    closed = strategic_loss_closed_form(spec, kind, x, beta)
    observed = observed_loss(kind, best_response(spec, x, beta).xhat, -1, beta)
    assert observed == pytest.approx(closed, rel=1e-12, abs=1e-12)


def test_observed_loss_matches_closed_form_on_ten_thousand_triples(rng):
    """Test learner-side loss after the best response equals the closed form on 10⁴ (cost, x, β) triples"""
    specs = [
        make_cost_spec(p, r, well_conditioned(rng, d), 0.25)
        for p in (1.5, 2.0, 3.0)
        for r in (1.5, 2.0, 3.0)
        for d in (2, 5, 10)
    ]
    kinds = list(LossKind)
    for i in range(10_000):
        spec = specs[i % len(specs)]
        kind = kinds[i % 2]
        x = random_vector(rng, spec.dim, 1.0)
        beta = random_vector(rng, spec.dim, 2.0)
        closed = strategic_loss_closed_form(spec, kind, x, beta)
        observed = observed_loss(kind, best_response(spec, x, beta).xhat, -1, beta)
        assert observed == pytest.approx(closed, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(spec=cost_specs(), kind=KINDS, seed=SEEDS, lam=st.floats(min_value=0.01, max_value=0.99))
def test_strategic_loss_is_convex(spec, kind, seed, lam):
    """Test chord inequality for β ↦ strategic loss"""
    rng = np.random.default_rng(seed)
    x = random_vector(rng, spec.dim, 1.0)
    b1 = random_vector(rng, spec.dim, 2.0)
    b2 = random_vector(rng, spec.dim, 2.0)

    def loss(b):
        return strategic_loss_closed_form(spec, kind, x, b)

    chord = lam * loss(b1) + (1 - lam) * loss(b2)
    assert loss(lam * b1 + (1 - lam) * b2) <= chord + 1e-9 * (1.0 + abs(chord))


@settings(max_examples=200, deadline=None)
@given(spec=cost_specs(), kind=KINDS, seed=SEEDS)
def test_subgradient_inequality(spec, kind, seed):
    """Test c(β′) ≥ c(β) + ⟨g, β′ − β⟩ for both subgradient maps"""
    rng = np.random.default_rng(seed)
    x = random_vector(rng, spec.dim, 1.0)
    beta = random_vector(rng, spec.dim, 2.0)
    other = random_vector(rng, spec.dim, 2.0)

    g = strategic_exact_subgradient(spec, kind, x, beta)
    base = strategic_loss_closed_form(spec, kind, x, beta)
    target = strategic_loss_closed_form(spec, kind, x, other)
    assert target >= base + g @ (other - beta) - 1e-8 * (1.0 + abs(base))

    g = nonstrategic_subgradient(kind, x, beta)
    base = observed_loss(kind, x, 1, beta)
    assert observed_loss(kind, x, 1, other) >= base + g @ (other - beta) - 1e-8


@settings(max_examples=100, deadline=None)
@given(spec=cost_specs(), kind=KINDS, seed=SEEDS)
def test_subgradients_match_finite_differences(spec, kind, seed):
    """Test analytic subgradients against central differences at smooth points"""
    rng = np.random.default_rng(seed)
    x = random_vector(rng, spec.dim, 1.0)
    beta = random_vector(rng, spec.dim, 2.0)
    u = spec.B @ beta
    assume(np.min(np.abs(u)) > 1e-2)

    z = -(x @ beta + spec.s * float(np.linalg.norm(u, spec.q)) ** spec.s / spec.s)
    if kind is LossKind.HINGE:
        assume(abs(1.0 - z) > 1e-3)
        assume(abs(1.0 - x @ beta) > 1e-3)

    def strategic(b):
        return strategic_loss_closed_form(spec, kind, x, b)

    analytic = strategic_exact_subgradient(spec, kind, x, beta)
    numeric = finite_difference_gradient(strategic, beta)
    np.testing.assert_allclose(analytic, numeric, atol=1e-5 * (1.0 + np.linalg.norm(analytic)))

    analytic = nonstrategic_subgradient(kind, x, beta)
    numeric = finite_difference_gradient(lambda b: observed_loss(kind, x, 1, b), beta)
    np.testing.assert_allclose(analytic, numeric, atol=1e-5)
