"""Exact soft policy evaluation, occupancy, objective and gradients of a
fixed softmax policy.

Conventions:
  * Q(s, a) excludes the entropy of s itself, tau * H is credited at every
    next state inside the backup.
  * The discounted occupancy is unnormalized, a start state contributes total
    mass 1 / (1 - gamma).
All linear systems are solved by dense LU.
"""

from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import block_diag, lu_factor, lu_solve

from softgrad.exceptions import ConfigurationError, StructuralError
from softgrad.gradcheck import DEFAULT_STEP, central_difference
from softgrad_oracle.mdp import SoftmaxPolicy, TabularMdp

DEFAULT_SERIES_TERMS = 500


def _require_discount(mdp: TabularMdp) -> None:
    if not 0.0 <= mdp.gamma < 1.0:
        raise ConfigurationError(f"Linear solves need a discount within [0, 1), got {mdp.gamma}.", ["gamma"])


def _require_match(mdp: TabularMdp, policy: SoftmaxPolicy) -> None:
    if policy.logits.shape != (mdp.num_states, mdp.num_actions):
        raise StructuralError(
            f"Policy is defined over {policy.logits.shape}, MDP has {(mdp.num_states, mdp.num_actions)}."
        )


def _solve(matrix: np.ndarray, rhs: np.ndarray, transposed: bool = False) -> np.ndarray:
    return lu_solve(lu_factor(matrix), rhs, trans=1 if transposed else 0)


def soft_backup(mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, q: np.ndarray) -> np.ndarray:
    """Exact backup operator:
    R(s,a) + gamma * sum_s' P(s,a,s') * (sum_a' pi(a'|s') Q(s',a') + tau * H(s'))."""

    _require_match(mdp, policy)

    next_values = np.sum(policy.probs * q, axis=1) + tau * policy.entropy()
    return mdp.rewards + mdp.gamma * np.einsum("sat,t->sa", mdp.transitions, next_values)


def exact_soft_q(mdp: TabularMdp, policy: SoftmaxPolicy, tau: float) -> np.ndarray:
    """Unique fixed point of soft_backup, solved as one linear system over all
    (s, a) pairs."""

    _require_discount(mdp)
    _require_match(mdp, policy)

    s, a = mdp.num_states, mdp.num_actions
    flat_transitions = mdp.transitions.reshape(s * a, s)
    # [S × S*A], row s averages the Q values of state s under the policy
    averaging = block_diag(*policy.probs[:, None, :])

    system = np.eye(s * a) - mdp.gamma * flat_transitions @ averaging
    rhs = mdp.rewards.ravel() + mdp.gamma * tau * flat_transitions @ policy.entropy()

    return _solve(system, rhs).reshape(s, a)


def soft_bellman_residual(mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, q: np.ndarray) -> float:
    return float(np.max(np.abs(q - soft_backup(mdp, policy, tau, q))))


class PolicyValues(NamedTuple):
    state_values: np.ndarray
    action_values: np.ndarray


def policy_evaluation(mdp: TabularMdp, policy: SoftmaxPolicy) -> PolicyValues:
    """Classical (entropy-free) values through the state-value system."""

    _require_discount(mdp)
    _require_match(mdp, policy)

    transitions = mdp.policy_transitions(policy)
    values = _solve(np.eye(mdp.num_states) - mdp.gamma * transitions, mdp.policy_rewards(policy))
    return PolicyValues(values, mdp.rewards + mdp.gamma * mdp.transitions @ values)


def discounted_occupancy(mdp: TabularMdp, policy: SoftmaxPolicy) -> np.ndarray:
    """rho(s) = sum_s0 rho0(s0) sum_k gamma^k p_k(s0 -> s), i.e. (I - gamma
    P_pi)^-T rho0."""

    _require_discount(mdp)
    _require_match(mdp, policy)

    transitions = mdp.policy_transitions(policy)
    return _solve(np.eye(mdp.num_states) - mdp.gamma * transitions, mdp.start, transposed=True)


def occupancy_series(mdp: TabularMdp, policy: SoftmaxPolicy, terms: int = DEFAULT_SERIES_TERMS) -> np.ndarray:
    """Truncated power series of the discounted occupancy."""

    _require_match(mdp, policy)

    transitions_t = mdp.policy_transitions(policy).T
    dist = mdp.start.copy()
    res = np.zeros_like(dist)
    weight = 1.0

    for _ in range(terms):
        res += weight * dist
        dist = transitions_t @ dist
        weight *= mdp.gamma

    return res


def exact_objective(mdp: TabularMdp, policy: SoftmaxPolicy, tau: float) -> float:
    """J = sum_s rho(s) (sum_a pi(a|s) R(s,a) + tau * H(s))."""

    rho = discounted_occupancy(mdp, policy)
    return float(rho @ mdp.policy_rewards(policy) + tau * rho @ policy.entropy())


def objective_from_q(mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, q: Optional[np.ndarray] = None) -> float:
    """The same objective as the start-state expectation of sum_a pi Q + tau * H."""

    if q is None:
        q = exact_soft_q(mdp, policy, tau)

    return float(mdp.start @ (np.sum(policy.probs * q, axis=1) + tau * policy.entropy()))


def soft_weights(q: np.ndarray, policy: SoftmaxPolicy, tau: float, baseline_constant: bool = True) -> np.ndarray:
    """Q - tau * log pi - tau, the factor multiplying the score function."""

    res = q - tau * policy.log_probs
    if baseline_constant:
        res = res - tau
    return res


def exact_policy_gradient(
    mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, baseline_constant: bool = True
) -> np.ndarray:
    """sum_s rho(s) sum_a (Q - tau log pi - tau)(s, a) * d pi(a|s) / d logits.

    :return: Gradient over the logits [S×A].
    """

    rho = discounted_occupancy(mdp, policy)
    probs = policy.probs
    weights = soft_weights(exact_soft_q(mdp, policy, tau), policy, tau, baseline_constant)

    # softmax jacobian contracted analytically: pi_b * (w_b - sum_a pi_a w_a)
    centered = weights - np.sum(probs * weights, axis=1, keepdims=True)
    return rho[:, None] * probs * centered


def classical_policy_gradient(mdp: TabularMdp, policy: SoftmaxPolicy) -> np.ndarray:
    """Entropy-free policy gradient theorem with explicit softmax jacobians."""

    rho = discounted_occupancy(mdp, policy)
    q = policy_evaluation(mdp, policy).action_values
    probs = policy.probs

    res = np.empty_like(probs)
    for s in range(mdp.num_states):
        jacobian = np.diag(probs[s]) - np.outer(probs[s], probs[s])
        res[s] = rho[s] * q[s] @ jacobian

    return res


def finite_difference_gradient(
    mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, h: float = DEFAULT_STEP, stencil: int = 3
) -> np.ndarray:
    """Central differences of exact_objective over every logit."""

    _require_match(mdp, policy)

    def objective(logits: np.ndarray) -> float:
        return exact_objective(mdp, SoftmaxPolicy(logits), tau)

    return central_difference(objective, policy.logits, h, stencil)


def gradient_ascent(
    mdp: TabularMdp, policy: SoftmaxPolicy, tau: float, step_size: float, steps: int
) -> tuple[SoftmaxPolicy, list[float]]:
    """Plain exact-gradient ascent on the logits.

    :return: Final policy and the objective before every step and after the last one.
    """

    objectives = [exact_objective(mdp, policy, tau)]

    for _ in range(steps):
        policy = SoftmaxPolicy(policy.logits + step_size * exact_policy_gradient(mdp, policy, tau))
        objectives.append(exact_objective(mdp, policy, tau))

    return policy, objectives
