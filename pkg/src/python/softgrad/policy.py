from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from softgrad.data.checkpoint import PolicyRecord
from softgrad.data.common import Activation
from softgrad.exceptions import StructuralError
from softgrad.nn import Gradient, MlpParams, Tape, backward, forward, polyak_update

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_STD_FLOOR = 1e-3


class ActionSample(NamedTuple):
    action: np.ndarray
    log_prob: float


class PolicyGradient(NamedTuple):
    trunk: Gradient
    mean: Gradient
    std: Gradient

    def flatten(self) -> np.ndarray:
        return np.concatenate([g.flatten() for g in self], axis=-1)


class PolicyTape(NamedTuple):
    trunk: Tape
    mean: Tape
    std: Tape
    raw_std: np.ndarray


class PolicyOutput(NamedTuple):
    mean: np.ndarray
    std: np.ndarray
    tape: PolicyTape


def gaussian_log_prob(mean: np.ndarray, std: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Diagonal Gaussian log-density, summed over the last axis."""

    z = (action - mean) / std
    return np.sum(-0.5 * LOG_2PI - np.log(std) - 0.5 * z * z, axis=-1)


def gaussian_entropy(std: np.ndarray) -> np.ndarray:
    return np.sum(0.5 * (LOG_2PI + 1.0) + np.log(std), axis=-1)


@dataclass
class GaussianPolicy:
    """State-conditioned diagonal Gaussian.

    The ReLU trunk feeds an identity head for the mean and a sigmoid head for
    the standard deviation, which is floored at ``std_floor``. Actions are never
    squashed, bounds are applied by environments only.
    """

    trunk: MlpParams
    mean_head: MlpParams
    std_head: MlpParams
    std_floor: float = DEFAULT_STD_FLOOR

    def __post_init__(self) -> None:
        if self.mean_head.in_dim != self.trunk.out_dim or self.std_head.in_dim != self.trunk.out_dim:
            raise StructuralError("Heads have to take the trunk output.")

        if self.mean_head.out_dim != self.std_head.out_dim:
            raise StructuralError("Mean and std heads have to produce the same number of values.")

        if self.std_head.layers[-1].activation != Activation.SIGMOID:
            raise StructuralError("Std head has to end with a sigmoid.")

        if not 0.0 < self.std_floor < 1.0:
            raise StructuralError(f"Std floor {self.std_floor} is out of (0, 1).")

    @classmethod
    def create(
        cls,
        state_dim: int,
        action_dim: int,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
        std_floor: float = DEFAULT_STD_FLOOR,
    ) -> GaussianPolicy:
        if not hidden_sizes:
            raise StructuralError("Policy needs at least one hidden layer.")

        sizes = (state_dim, *hidden_sizes)
        trunk = MlpParams.create(sizes, [Activation.RELU] * len(hidden_sizes), rng)
        mean_head = MlpParams.create((hidden_sizes[-1], action_dim), [Activation.IDENTITY], rng)
        std_head = MlpParams.create((hidden_sizes[-1], action_dim), [Activation.SIGMOID], rng)
        return cls(trunk, mean_head, std_head, std_floor)

    @property
    def state_dim(self) -> int:
        return self.trunk.in_dim

    @property
    def action_dim(self) -> int:
        return self.mean_head.out_dim

    @property
    def networks(self) -> tuple[MlpParams, MlpParams, MlpParams]:
        return self.trunk, self.mean_head, self.std_head

    def clone(self) -> GaussianPolicy:
        return copy.deepcopy(self)

    def forward(self, state: np.ndarray | Sequence[float]) -> PolicyOutput:
        """Mean and floored std for a state [S] or a batch of states [B×S]."""

        hidden, trunk_tape = forward(self.trunk, state)
        mean, mean_tape = forward(self.mean_head, hidden)
        raw_std, std_tape = forward(self.std_head, hidden)
        std = np.maximum(raw_std, self.std_floor)
        return PolicyOutput(mean, std, PolicyTape(trunk_tape, mean_tape, std_tape, raw_std))

    def mean_action(self, state: np.ndarray | Sequence[float]) -> np.ndarray:
        return self.forward(state).mean

    def sample(self, state: np.ndarray | Sequence[float], count: int, rng: np.random.Generator) -> list[ActionSample]:
        """Draws count independent actions for one state."""

        actions, log_probs = self.sample_batch(np.asarray(state, dtype=np.float64)[None, :], count, rng)
        return [ActionSample(a, float(lp)) for a, lp in zip(actions[0], log_probs[0])]

    def sample_batch(
        self, states: np.ndarray, count: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Draws count actions for every row of states.

        :return: actions [N×M×A] and their log-probabilities [N×M].
        """

        if count < 1:
            raise StructuralError(f"At least one action has to be sampled, got {count}.")

        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2:
            raise StructuralError("States have to be a batch [N×S].")

        out = self.forward(states)
        z = rng.standard_normal((states.shape[0], count, self.action_dim))
        actions = out.mean[:, None, :] + out.std[:, None, :] * z
        return actions, gaussian_log_prob(out.mean[:, None, :], out.std[:, None, :], actions)

    def log_prob(self, state: np.ndarray | Sequence[float], action: np.ndarray | Sequence[float]) -> float:
        out = self.forward(state)
        return float(gaussian_log_prob(out.mean, out.std, np.asarray(action, dtype=np.float64)))

    def log_prob_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        out = self.forward(np.asarray(states, dtype=np.float64))
        return gaussian_log_prob(out.mean, out.std, np.asarray(actions, dtype=np.float64))

    def entropy(self, state: np.ndarray | Sequence[float]) -> float:
        return float(gaussian_entropy(self.forward(state).std))

    def entropy_batch(self, states: np.ndarray) -> np.ndarray:
        return gaussian_entropy(self.forward(np.asarray(states, dtype=np.float64)).std)

    def _score(
        self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray, per_sample: bool
    ) -> PolicyGradient:
        out = self.forward(states)
        diff = actions - out.mean
        var = out.std * out.std

        d_mean = diff / var
        d_std = -1.0 / out.std + diff * diff / (var * out.std)
        # floored entries do not depend on the parameters
        d_std = np.where(out.tape.raw_std > self.std_floor, d_std, 0.0)

        w = weights[:, None]
        mean_grad, hidden_from_mean = backward(self.mean_head, out.tape.mean, d_mean * w, per_sample)
        std_grad, hidden_from_std = backward(self.std_head, out.tape.std, d_std * w, per_sample)
        trunk_grad, _ = backward(self.trunk, out.tape.trunk, hidden_from_mean + hidden_from_std, per_sample)

        return PolicyGradient(trunk_grad, mean_grad, std_grad)

    def score_grad(self, state: np.ndarray | Sequence[float], action: np.ndarray | Sequence[float]) -> PolicyGradient:
        """Exact gradient of log_prob(state, action) over all policy
        parameters."""

        states = np.asarray(state, dtype=np.float64)[None, :]
        actions = np.asarray(action, dtype=np.float64)[None, :]
        return self._score(states, actions, np.ones(1), per_sample=False)

    def weighted_score(self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray) -> PolicyGradient:
        """Sum over rows of weights[i] * grad log pi(actions[i] | states[i]), one
        backward pass."""

        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)

        if states.shape[0] != actions.shape[0] or weights.shape != (states.shape[0],):
            raise StructuralError("States, actions and weights have to have the same number of rows.")

        return self._score(states, actions, weights, per_sample=False)

    def score_grad_per_sample(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Flattened score gradients, one row per (state, action) pair."""

        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        return self._score(states, actions, np.ones(states.shape[0]), per_sample=True).flatten()

    def flatten(self) -> np.ndarray:
        return np.concatenate([net.flatten() for net in self.networks])

    def unflatten(self, vector: np.ndarray) -> GaussianPolicy:
        vector = np.asarray(vector, dtype=np.float64)
        sizes = [net.flatten().size for net in self.networks]

        if vector.shape != (sum(sizes),):
            raise StructuralError(f"Expected {sum(sizes)} values, got {vector.size}.")

        parts = np.split(vector, np.cumsum(sizes)[:-1])
        trunk, mean_head, std_head = (net.unflatten(part) for net, part in zip(self.networks, parts))
        return GaussianPolicy(trunk, mean_head, std_head, self.std_floor)

    def polyak_from(self, online: GaussianPolicy, alpha: float) -> None:
        for target_net, online_net in zip(self.networks, online.networks):
            polyak_update(target_net, online_net, alpha)

    def to_record(self) -> PolicyRecord:
        return PolicyRecord(
            self.state_dim,
            self.action_dim,
            self.std_floor,
            self.trunk.to_record(),
            self.mean_head.to_record(),
            self.std_head.to_record(),
        )

    @classmethod
    def from_record(cls, record: PolicyRecord) -> GaussianPolicy:
        policy = cls(
            MlpParams.from_record(record.trunk),
            MlpParams.from_record(record.mean_head),
            MlpParams.from_record(record.std_head),
            record.std_floor,
        )

        if policy.state_dim != record.state_dim or policy.action_dim != record.action_dim:
            raise StructuralError("Policy checkpoint header does not match its networks.")

        return policy
