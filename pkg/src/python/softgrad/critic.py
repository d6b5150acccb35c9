from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from softgrad.data.checkpoint import CriticRecord
from softgrad.data.common import Activation, Direction
from softgrad.data.config import AdamConfig
from softgrad.exceptions import ConfigurationError, NumericError, StructuralError
from softgrad.nn import Gradient, MlpParams, adam_step, backward, forward, polyak_update


@dataclass
class BackupBatch:
    """Next-state data for the sampled soft Bellman backup.

    ``next_actions`` [N×M×A] and ``next_log_probs`` [N×M] come from the target
    policy. ``next_entropy`` [N] is only set when the analytic entropy replaces
    the sampled -log pi term.
    """

    rewards: np.ndarray
    next_states: np.ndarray
    terminal: np.ndarray
    next_actions: np.ndarray
    next_log_probs: np.ndarray
    next_entropy: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        self.next_log_probs = np.asarray(self.next_log_probs, dtype=np.float64)

        n = self.rewards.shape[0]

        if self.next_log_probs.ndim != 2 or self.next_log_probs.shape[0] != n:
            raise StructuralError("Log-probabilities have to be [N×M].")

        if self.next_log_probs.shape[1] < 1:
            raise StructuralError("At least one next action per transition is needed.")

        if self.terminal.shape != (n,) or self.next_actions.shape[:2] != self.next_log_probs.shape:
            raise StructuralError("Backup batch parts do not match in size.")

    @property
    def samples(self) -> int:
        return self.next_log_probs.shape[1]


def backup_targets(
    rewards: np.ndarray,
    terminal: np.ndarray,
    next_q: np.ndarray,
    next_log_probs: np.ndarray,
    gamma: float,
    tau: float,
    next_entropy: None | np.ndarray = None,
) -> np.ndarray:
    """y = r + gamma * mean_j [Q'(s', a'_j) - tau * log pi'(a'_j | s')], y = r at
    terminals.

    :param next_q: Target critic values [N×M] of the sampled next actions.
    :param next_log_probs: Their log-probabilities under the target policy [N×M].
    :param next_entropy: If given [N], tau * entropy replaces the sampled entropy term.
    :return: Targets [N].
    """

    if not 0.0 <= gamma < 1.0:
        raise ConfigurationError(f"Discount has to be within [0, 1), got {gamma}.", ["gamma"])

    if not tau >= 0.0:
        raise ConfigurationError(f"Temperature can't be negative, got {tau}.", ["tau"])

    if not np.all(np.isfinite(next_log_probs)):
        bad = np.argwhere(~np.isfinite(next_log_probs))
        raise NumericError(f"Non-finite log-probabilities at (transition, sample) {bad.tolist()}.")

    if next_entropy is None:
        bootstrap = np.mean(next_q - tau * next_log_probs, axis=1)
    else:
        bootstrap = np.mean(next_q, axis=1) + tau * next_entropy

    return np.where(terminal, rewards, rewards + gamma * bootstrap)


@dataclass
class SoftQ:
    """Soft Q-network over concatenated (state, action) and its target copy."""

    network: MlpParams
    target: MlpParams
    state_dim: int

    def __post_init__(self) -> None:
        if self.network.out_dim != 1:
            raise StructuralError("Critic has to output a single value.")

        if self.network.in_dim <= self.state_dim:
            raise StructuralError("Critic input has to hold the state and at least one action dimension.")

        if [la.weight.shape for la in self.network.layers] != [la.weight.shape for la in self.target.layers]:
            raise StructuralError("Target network differs in shape.")

    @classmethod
    def create(
        cls, state_dim: int, action_dim: int, hidden_sizes: Sequence[int], rng: np.random.Generator
    ) -> SoftQ:
        sizes = (state_dim + action_dim, *hidden_sizes, 1)
        activations = [Activation.RELU] * len(hidden_sizes) + [Activation.IDENTITY]
        network = MlpParams.create(sizes, activations, rng)
        return cls(network, network.clone(), state_dim)

    @property
    def action_dim(self) -> int:
        return self.network.in_dim - self.state_dim

    def clone(self) -> SoftQ:
        return copy.deepcopy(self)

    def _inputs(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        if states.shape[-1] != self.state_dim or actions.shape[-1] != self.action_dim:
            raise StructuralError(
                f"Critic expects states of dimension {self.state_dim} and actions of dimension {self.action_dim}."
            )
        return np.concatenate([states, actions], axis=-1)

    def q_value(
        self, state: np.ndarray | Sequence[float], action: np.ndarray | Sequence[float], use_target: bool = False
    ) -> float:
        inputs = self._inputs(np.asarray(state, dtype=np.float64), np.asarray(action, dtype=np.float64))
        out, _ = forward(self.target if use_target else self.network, inputs)
        return float(out[0])

    def q_values(self, states: np.ndarray, actions: np.ndarray, use_target: bool = False) -> np.ndarray:
        """Q for batches; leading dimensions of states and actions have to
        agree, e.g. [N×S] with [N×A] or [N×M×S] with [N×M×A]."""

        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)

        inputs = self._inputs(states, actions)
        lead = inputs.shape[:-1]
        out, _ = forward(self.target if use_target else self.network, inputs.reshape(-1, inputs.shape[-1]))
        return out[:, 0].reshape(lead)

    def sampled_backup(self, batch: BackupBatch, gamma: float, tau: float) -> np.ndarray:
        """Targets of the soft loss, using the target critic on the sampled
        next actions."""

        m = batch.samples
        next_states = np.repeat(np.asarray(batch.next_states, dtype=np.float64)[:, None, :], m, axis=1)
        next_q = self.q_values(next_states, batch.next_actions, use_target=True)
        return backup_targets(
            batch.rewards, batch.terminal, next_q, batch.next_log_probs, gamma, tau, batch.next_entropy
        )

    def soft_loss(self, states: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> tuple[float, Gradient]:
        """Mean squared residual against fixed targets and its exact gradient
        over the online network."""

        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)

        n = states.shape[0]
        if n < 1 or actions.shape[0] != n or targets.shape != (n,):
            raise StructuralError("Soft loss needs matching, non-empty states, actions and targets.")

        out, tape = forward(self.network, self._inputs(states, actions))
        residual = out[:, 0] - targets

        if not np.all(np.isfinite(residual)):
            bad = np.argwhere(~np.isfinite(residual)).ravel().tolist()
            raise NumericError(f"Non-finite critic residuals at {bad}.")

        loss = float(np.mean(residual * residual))
        gradient, _ = backward(self.network, tape, (2.0 / n) * residual[:, None])
        return loss, gradient

    def update(self, gradient: Gradient, adam: AdamConfig) -> SoftQ:
        """Descends the soft loss; the target network is left alone."""

        adam_step(self.network, gradient, adam, Direction.DESCEND)
        return self

    def sync_target(self, alpha: float) -> None:
        polyak_update(self.target, self.network, alpha)

    def to_record(self) -> CriticRecord:
        return CriticRecord(self.network.to_record(), self.target.to_record())

    @classmethod
    def from_record(cls, record: CriticRecord, state_dim: int) -> SoftQ:
        return cls(MlpParams.from_record(record.network), MlpParams.from_record(record.target), state_dim)


def critic_update(critic: SoftQ, gradient: Gradient, adam: AdamConfig) -> SoftQ:
    return critic.update(gradient, adam)
