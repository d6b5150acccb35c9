"""Monte-Carlo counterparts of the exact quantities.

Estimators here are only meant to be compared with their exact values, so
they return standard errors alongside the estimates.
"""

from typing import NamedTuple, Optional

import numpy as np

from softgrad.agent import actor_gradient
from softgrad.critic import backup_targets
from softgrad.exceptions import PreconditionError
from softgrad_oracle.exact import discounted_occupancy, exact_soft_q, soft_weights
from softgrad_oracle.mdp import SoftmaxPolicy, TabularMdp, TabularQ


class Estimate(NamedTuple):
    value: np.ndarray
    standard_error: np.ndarray


def _occupancy_distribution(mdp: TabularMdp, policy: SoftmaxPolicy) -> tuple[np.ndarray, float]:
    rho = discounted_occupancy(mdp, policy)
    mass = float(rho.sum())
    return rho / mass, mass


def mc_gradient_estimate(
    mdp: TabularMdp,
    policy: SoftmaxPolicy,
    tau: float,
    samples: int,
    rng: np.random.Generator,
    q: Optional[np.ndarray] = None,
    baseline_constant: bool = True,
) -> Estimate:
    """Score-function estimate of the soft policy gradient.

    (s, a) pairs are drawn from rho(s) pi(a|s) / |rho|_1, the weighted scores are
    averaged and multiplied back by |rho|_1. The exact soft Q is used unless q is
    given.
    """

    if samples < 1:
        raise PreconditionError(f"At least one sample is needed, got {samples}.")

    if q is None:
        q = exact_soft_q(mdp, policy, tau)

    states, mass = _occupancy_distribution(mdp, policy)
    probs = policy.probs
    joint = (states[:, None] * probs).ravel()
    counts = rng.multinomial(samples, joint / joint.sum()).reshape(probs.shape)

    # contribution of one sample (s, a) to the logit (s, b)
    weights = soft_weights(q, policy, tau, baseline_constant)
    contrib = mass * weights[:, :, None] * (np.eye(mdp.num_actions)[None, :, :] - probs[:, None, :])

    freq = counts / samples
    mean = np.einsum("sa,sab->sb", freq, contrib)

    if samples == 1:
        return Estimate(mean, np.zeros_like(mean))

    second = np.einsum("sa,sab->sb", freq, contrib * contrib)
    variance = np.maximum(second - mean * mean, 0.0) * samples / (samples - 1)
    return Estimate(mean, np.sqrt(variance / samples))


def occupancy_states(mdp: TabularMdp, policy: SoftmaxPolicy, count: int, rng: np.random.Generator) -> np.ndarray:
    """State indices drawn from the normalized discounted occupancy."""

    dist, _ = _occupancy_distribution(mdp, policy)
    return rng.choice(mdp.num_states, size=count, p=dist)


def double_sampled_gradient(
    mdp: TabularMdp,
    policy: SoftmaxPolicy,
    tau: float,
    states: int,
    samples: int,
    rng: np.random.Generator,
    q: Optional[np.ndarray] = None,
) -> np.ndarray:
    """The agent's actor gradient estimator run on the tabular policy.

    States come from the normalized occupancy (in place of a replay buffer),
    actions from the policy, and the result is rescaled by |rho|_1 so that it
    estimates the exact gradient.
    """

    if q is None:
        q = exact_soft_q(mdp, policy, tau)

    _, mass = _occupancy_distribution(mdp, policy)
    drawn = occupancy_states(mdp, policy, states, rng)
    return mass * actor_gradient(policy, TabularQ(q), drawn, samples, tau, rng)


def sampled_backups(
    mdp: TabularMdp,
    policy: SoftmaxPolicy,
    q: np.ndarray,
    tau: float,
    state: int,
    action: int,
    count: int,
    samples: int,
    rng: np.random.Generator,
    next_state: Optional[int] = None,
) -> np.ndarray:
    """count independent sampled backups of the (state, action) pair, each
    averaging ``samples`` next actions.

    Next states are drawn from the transition tensor unless ``next_state`` fixes
    them, as a stored transition does.
    """

    if count < 1:
        raise PreconditionError(f"At least one backup is needed, got {count}.")

    if next_state is None:
        next_states = rng.choice(mdp.num_states, size=count, p=mdp.transitions[state, action])
    else:
        next_states = np.full(count, next_state)

    actions, log_probs = policy.sample_batch(next_states, samples, rng)

    return backup_targets(
        np.full(count, mdp.rewards[state, action]),
        np.zeros(count, dtype=bool),
        q[next_states[:, None], actions],
        log_probs,
        mdp.gamma,
        tau,
    )
