"""Finite MDPs and softmax policies over them."""

from __future__ import annotations

import os
import pkgutil
from dataclasses import dataclass

import numpy as np
import yaml
from scipy.special import log_softmax, softmax

from softgrad.exceptions import StructuralError
from softgrad.exceptions.helpers import handle
from softgrad.logging import get_logger

logger = get_logger(__name__)

PROBABILITY_TOLERANCE = 1e-12


def _check_distribution(arr: np.ndarray, what: str) -> None:
    if np.any(arr < 0.0):
        raise StructuralError(f"{what} has negative entries.")

    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE):
        raise StructuralError(f"{what} does not sum to one (worst sum {sums.flat[np.argmax(np.abs(sums - 1.0))]}).")


@dataclass
class TabularMdp:
    """(transitions [S×A×S], rewards [S×A], gamma, start distribution [S]).

    The discount is not limited here, solvers refuse gamma >= 1.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    start: np.ndarray

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.gamma = float(self.gamma)

        if self.transitions.ndim != 3 or self.transitions.shape[0] != self.transitions.shape[2]:
            raise StructuralError(f"Transition tensor has to be [S×A×S], got {self.transitions.shape}.")

        if self.transitions.shape[0] < 1 or self.transitions.shape[1] < 1:
            raise StructuralError("MDP needs at least one state and one action.")

        if self.rewards.shape != self.transitions.shape[:2]:
            raise StructuralError(f"Reward matrix has to be {self.transitions.shape[:2]}, got {self.rewards.shape}.")

        if self.start.shape != (self.num_states,):
            raise StructuralError(f"Start distribution has to have {self.num_states} entries.")

        if not np.all(np.isfinite(self.rewards)):
            raise StructuralError("Rewards have to be finite.")

        if not self.gamma >= 0.0:
            raise StructuralError(f"Discount can't be negative, got {self.gamma}.")

        _check_distribution(self.transitions, "Transition tensor")
        _check_distribution(self.start, "Start distribution")

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    def policy_transitions(self, policy: SoftmaxPolicy) -> np.ndarray:
        """State-to-state matrix [S×S] of following the policy for one step."""

        return np.einsum("sa,sat->st", policy.probs, self.transitions)

    def policy_rewards(self, policy: SoftmaxPolicy) -> np.ndarray:
        return np.sum(policy.probs * self.rewards, axis=1)

    def to_dict(self) -> dict:
        return {
            "S": self.num_states,
            "A": self.num_actions,
            "gamma": self.gamma,
            "start": self.start.tolist(),
            "P": self.transitions.tolist(),
            "R": self.rewards.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TabularMdp:
        mdp = cls(data["P"], data["R"], data["gamma"], data["start"])

        if mdp.num_states != int(data["S"]) or mdp.num_actions != int(data["A"]):
            raise StructuralError("Declared sizes do not match the arrays.")

        return mdp


@dataclass
class SoftmaxPolicy:
    """pi(a|s) = softmax(logits[s])[a]; states and actions are indices."""

    logits: np.ndarray

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=np.float64)

        if self.logits.ndim != 2 or 0 in self.logits.shape:
            raise StructuralError(f"Logits have to be a non-empty [S×A] matrix, got {self.logits.shape}.")

        if not np.all(np.isfinite(self.logits)):
            raise StructuralError("Logits have to be finite.")

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> SoftmaxPolicy:
        return cls(np.zeros((num_states, num_actions)))

    @property
    def num_states(self) -> int:
        return self.logits.shape[0]

    @property
    def num_actions(self) -> int:
        return self.logits.shape[1]

    @property
    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    @property
    def log_probs(self) -> np.ndarray:
        return log_softmax(self.logits, axis=1)

    def entropy(self) -> np.ndarray:
        """Per-state entropy [S]."""

        return -np.sum(self.probs * self.log_probs, axis=1)

    def sample_batch(self, states: np.ndarray, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draws count actions for every state index.

        :return: actions [N×M] and their log-probabilities [N×M].
        """

        if count < 1:
            raise StructuralError(f"At least one action has to be sampled, got {count}.")

        states = np.asarray(states, dtype=np.int64)
        cdf = np.cumsum(self.probs[states], axis=1)
        u = rng.random((states.shape[0], count))

        # inverse transform, the clip guards against cdf[-1] slightly below one
        actions = np.minimum(np.sum(u[:, :, None] >= cdf[:, None, :], axis=2), self.num_actions - 1)
        return actions, self.log_probs[states[:, None], actions]

    def score(self, state: int, action: int) -> np.ndarray:
        """grad over logits of log pi(action|state), shaped [S×A]."""

        res = np.zeros_like(self.logits)
        res[state] = -self.probs[state]
        res[state, action] += 1.0
        return res

    def weighted_score(self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Sum over rows of weights[i] * score(states[i], actions[i])."""

        states = np.asarray(states, dtype=np.int64)
        actions = np.asarray(actions, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)

        if states.shape != actions.shape or weights.shape != states.shape or states.ndim != 1:
            raise StructuralError("States, actions and weights have to be vectors of the same length.")

        res = np.zeros_like(self.logits)
        np.add.at(res, states, -weights[:, None] * self.probs[states])
        np.add.at(res, (states, actions), weights)
        return res


@dataclass
class TabularQ:
    """Q table exposed through the batched lookup interface of network
    critics."""

    table: np.ndarray

    def q_values(self, states: np.ndarray, actions: np.ndarray, use_target: bool = False) -> np.ndarray:
        return self.table[np.asarray(states, dtype=np.int64), np.asarray(actions, dtype=np.int64)]


def random_mdp(
    num_states: int,
    num_actions: int,
    gamma: float,
    rng: np.random.Generator,
    reward_range: tuple[float, float] = (-1.0, 1.0),
) -> TabularMdp:
    """Dense Dirichlet transitions and start distribution, uniform rewards."""

    transitions = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    rewards = rng.uniform(*reward_range, size=(num_states, num_actions))
    start = rng.dirichlet(np.ones(num_states))

    transitions /= transitions.sum(axis=2, keepdims=True)
    start /= start.sum()

    return TabularMdp(transitions, rewards, gamma, start)


def random_policy(num_states: int, num_actions: int, rng: np.random.Generator, scale: float = 1.0) -> SoftmaxPolicy:
    return SoftmaxPolicy(rng.normal(0.0, scale, size=(num_states, num_actions)))


@handle(StructuralError, logger, (yaml.YAMLError, KeyError, TypeError, ValueError), "Invalid MDP fixture.")
def parse_fixture(content: str | bytes) -> TabularMdp:
    data = yaml.safe_load(content)

    if not isinstance(data, dict):
        raise TypeError("Fixture has to be a mapping.")

    return TabularMdp.from_dict(data)


@handle(StructuralError, logger, OSError, "Can't read MDP fixture.")
def load_fixture(path: str | os.PathLike) -> TabularMdp:
    with open(path) as f:
        return parse_fixture(f.read())


def dump_fixture(mdp: TabularMdp, path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(mdp.to_dict(), f, default_flow_style=None, sort_keys=False)


def builtin_fixture(name: str) -> TabularMdp:
    """One of the fixtures shipped with the package, e.g. ``chain_3x2``."""

    try:
        data = pkgutil.get_data(__name__.rpartition(".")[0], f"fixtures/{name}.yaml")
    except OSError:
        data = None

    if data is None:
        raise StructuralError(f"Unknown fixture {name}.")

    return parse_fixture(data)
