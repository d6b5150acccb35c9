import math

import numpy as np
import pytest

from softgrad.exceptions import ConfigurationError, StructuralError
from softgrad.gradcheck import violation
from softgrad_oracle.exact import (
    classical_policy_gradient,
    discounted_occupancy,
    exact_objective,
    exact_policy_gradient,
    exact_soft_q,
    finite_difference_gradient,
    gradient_ascent,
    objective_from_q,
    occupancy_series,
    policy_evaluation,
    soft_bellman_residual,
)
from softgrad_oracle.mdp import SoftmaxPolicy, TabularMdp, builtin_fixture, random_mdp, random_policy


def test_soft_q_geometric_series() -> None:
    mdp = builtin_fixture("single_state")

    for tau in (0.0, 0.5, 3.0):
        q = exact_soft_q(mdp, SoftmaxPolicy.uniform(1, 1), tau)
        assert q == pytest.approx(np.array([[10.0]]), abs=1e-12)


def test_soft_q_symmetric_actions() -> None:
    mdp = builtin_fixture("single_state_two_actions")
    q = exact_soft_q(mdp, SoftmaxPolicy.uniform(1, 2), 1.0)

    assert q == pytest.approx(np.full((1, 2), (1 + 0.9 * math.log(2)) / 0.1), abs=1e-10)


@pytest.mark.parametrize("gamma", [0.8, 0.9, 0.99])
@pytest.mark.parametrize("tau", [0.0, 0.5, 2.0])
def test_soft_bellman_residual(gamma: float, tau: float) -> None:
    rng = np.random.default_rng(int(gamma * 100) + int(tau * 10))

    for _ in range(5):
        s, a = rng.integers(1, 21), rng.integers(1, 6)
        mdp = random_mdp(s, a, gamma, rng)
        policy = random_policy(s, a, rng)

        assert soft_bellman_residual(mdp, policy, tau, exact_soft_q(mdp, policy, tau)) <= 1e-10


def test_undiscounted_is_refused() -> None:
    mdp = builtin_fixture("single_state")
    undiscounted = TabularMdp(mdp.transitions, mdp.rewards, 1.0, mdp.start)
    policy = SoftmaxPolicy.uniform(1, 1)

    with pytest.raises(ConfigurationError) as e:
        exact_soft_q(undiscounted, policy, 1.0)
    assert e.value.keys == ["gamma"]

    for func in (discounted_occupancy, policy_evaluation):
        with pytest.raises(ConfigurationError):
            func(undiscounted, policy)

    with pytest.raises(ConfigurationError):
        exact_objective(undiscounted, policy, 1.0)


def test_policy_shape_mismatch() -> None:
    with pytest.raises(StructuralError):
        exact_soft_q(builtin_fixture("chain_3x2"), SoftmaxPolicy.uniform(2, 2), 1.0)


def test_occupancy_examples() -> None:
    assert discounted_occupancy(builtin_fixture("single_state"), SoftmaxPolicy.uniform(1, 1)) == pytest.approx(
        np.array([10.0]), abs=1e-12
    )

    rho = discounted_occupancy(builtin_fixture("two_absorbing"), random_policy(2, 2, np.random.default_rng(0)))
    assert rho == pytest.approx(np.array([10.0, 0.0]), abs=1e-12)


@pytest.mark.parametrize("gamma", [0.8, 0.9])
def test_occupancy_series(gamma: float) -> None:
    rng = np.random.default_rng(4)

    for _ in range(10):
        s, a = rng.integers(1, 21), rng.integers(1, 6)
        mdp = random_mdp(s, a, gamma, rng)
        policy = random_policy(s, a, rng)

        assert np.max(np.abs(occupancy_series(mdp, policy, 500) - discounted_occupancy(mdp, policy))) <= 1e-8


def test_occupancy_mass() -> None:
    rng = np.random.default_rng(2)
    mdp = random_mdp(6, 3, 0.95, rng)

    assert discounted_occupancy(mdp, random_policy(6, 3, rng)).sum() == pytest.approx(20.0, rel=1e-12)


def test_objective_closed_form() -> None:
    mdp = builtin_fixture("single_state_two_actions")
    assert exact_objective(mdp, SoftmaxPolicy.uniform(1, 2), 1.0) == pytest.approx(
        (1 + math.log(2)) / 0.1, abs=1e-10
    )


def test_objective_without_entropy() -> None:
    rng = np.random.default_rng(8)
    mdp = random_mdp(7, 3, 0.9, rng)
    policy = random_policy(7, 3, rng)

    values = policy_evaluation(mdp, policy).state_values
    assert exact_objective(mdp, policy, 0.0) == pytest.approx(float(mdp.start @ values), abs=1e-10)


@pytest.mark.parametrize("tau", [0.0, 0.5, 2.0])
def test_objective_forms_agree(tau: float) -> None:
    rng = np.random.default_rng(10)

    for gamma in (0.8, 0.9):
        for _ in range(10):
            s, a = rng.integers(1, 11), rng.integers(1, 6)
            mdp = random_mdp(s, a, gamma, rng)
            policy = random_policy(s, a, rng)

            assert exact_objective(mdp, policy, tau) == pytest.approx(objective_from_q(mdp, policy, tau), abs=1e-10)


def test_zero_temperature_collapse() -> None:
    rng = np.random.default_rng(12)

    for _ in range(10):
        s, a = rng.integers(2, 11), rng.integers(2, 6)
        mdp = random_mdp(s, a, 0.9, rng)
        policy = random_policy(s, a, rng)

        np.testing.assert_allclose(
            exact_soft_q(mdp, policy, 0.0), policy_evaluation(mdp, policy).action_values, rtol=1e-10, atol=1e-10
        )
        np.testing.assert_allclose(
            exact_policy_gradient(mdp, policy, 0.0), classical_policy_gradient(mdp, policy), rtol=1e-9, atol=1e-10
        )


def test_uniform_policy_is_stationary_for_equal_rewards() -> None:
    mdp = builtin_fixture("symmetric_3x2")

    for tau in (0.0, 0.5, 2.0):
        assert np.max(np.abs(exact_policy_gradient(mdp, SoftmaxPolicy.uniform(3, 2), tau))) <= 1e-10


def test_gradient_matches_finite_differences() -> None:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, np.random.default_rng(1))

    for tau in (0.0, 0.5, 2.0):
        assert violation(exact_policy_gradient(mdp, policy, tau), finite_difference_gradient(mdp, policy, tau)) <= 1.0


@pytest.mark.parametrize("gamma", [0.8, 0.9, 0.99])
@pytest.mark.parametrize("tau", [0.0, 0.5, 2.0])
def test_gradient_matches_five_point_differences(gamma: float, tau: float) -> None:
    rng = np.random.default_rng(1000 + int(gamma * 100) + int(tau * 10))

    for _ in range(12):
        s, a = rng.integers(2, 11), rng.integers(2, 6)
        mdp = random_mdp(s, a, gamma, rng)
        policy = random_policy(s, a, rng)

        fd = finite_difference_gradient(mdp, policy, tau, h=1e-3, stencil=5)
        assert violation(exact_policy_gradient(mdp, policy, tau), fd) <= 1.0


def test_tied_logit_derivative() -> None:
    # logits (x/2, -x/2) give pi_0 = sigmoid(x), so dJ/dx = g[0, 0] and has a closed form
    gamma, tau, r0, r1 = 0.9, 0.7, 1.0, -0.5
    mdp = TabularMdp([[[1.0], [1.0]]], [[r0, r1]], gamma, [1.0])

    for x in (-1.5, 0.0, 0.4, 2.0):
        policy = SoftmaxPolicy([[x / 2, -x / 2]])
        sig = 1.0 / (1.0 + math.exp(-x))
        expected = sig * (1 - sig) * (r0 - r1 - tau * x) / (1 - gamma)

        fd = finite_difference_gradient(mdp, policy, tau)
        dx = 0.5 * (fd[0, 0] - fd[0, 1])

        assert dx == pytest.approx(expected, rel=1e-6, abs=1e-9)
        assert exact_policy_gradient(mdp, policy, tau)[0, 0] == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_finite_difference_order() -> None:
    mdp = builtin_fixture("chain_3x2")
    policy = random_policy(3, 2, np.random.default_rng(6))
    exact = exact_policy_gradient(mdp, policy, 1.0)

    coarse = np.linalg.norm(finite_difference_gradient(mdp, policy, 1.0, h=1e-2) - exact)
    fine = np.linalg.norm(finite_difference_gradient(mdp, policy, 1.0, h=5e-3) - exact)

    assert 3.5 < coarse / fine < 4.5


def test_baseline_constant_does_not_matter() -> None:
    rng = np.random.default_rng(21)

    for _ in range(10):
        s, a = rng.integers(1, 11), rng.integers(1, 6)
        mdp = random_mdp(s, a, 0.9, rng)
        policy = random_policy(s, a, rng)

        with_constant = exact_policy_gradient(mdp, policy, 2.0)
        without = exact_policy_gradient(mdp, policy, 2.0, baseline_constant=False)

        assert np.max(np.abs(with_constant - without)) <= 1e-10


def test_gradient_ascent_is_monotone() -> None:
    rng = np.random.default_rng(3)
    mdp = random_mdp(4, 3, 0.8, rng)

    _, objectives = gradient_ascent(mdp, random_policy(4, 3, rng), 0.5, 0.1, 200)

    assert len(objectives) == 201
    assert np.all(np.diff(objectives) >= -1e-12)
    assert objectives[-1] > objectives[0]
