from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from softgrad.exceptions import NumericError, PreconditionError, StructuralError

DEFAULT_CAPACITY = 3_000_000
_INITIAL_ALLOCATION = 1024


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool = False
    truncated: bool = False

    def __post_init__(self) -> None:
        self.state = np.asarray(self.state, dtype=np.float64)
        self.action = np.asarray(self.action, dtype=np.float64)
        self.next_state = np.asarray(self.next_state, dtype=np.float64)
        self.reward = float(self.reward)

        if self.terminal and self.truncated:
            raise StructuralError("Transition can't be both terminal and truncated.")


class Minibatch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminal: np.ndarray
    truncated: np.ndarray

    @property
    def size(self) -> int:
        return self.rewards.shape[0]


class ReplayBuffer:
    """Fixed-capacity ring of transitions, oldest entries are overwritten
    first.

    Storage grows on demand up to the capacity, so large capacities cost
    nothing until they are used.
    """

    def __init__(self, state_dim: int, action_dim: int, capacity: int = DEFAULT_CAPACITY) -> None:
        if capacity < 1:
            raise PreconditionError("Capacity has to be positive.")

        self.state_dim = state_dim
        self.action_dim = action_dim
        self.capacity = capacity
        self._cursor = 0
        self._size = 0

        alloc = min(capacity, _INITIAL_ALLOCATION)
        self._states = np.empty((alloc, state_dim))
        self._actions = np.empty((alloc, action_dim))
        self._rewards = np.empty(alloc)
        self._next_states = np.empty((alloc, state_dim))
        self._terminal = np.empty(alloc, dtype=bool)
        self._truncated = np.empty(alloc, dtype=bool)

    def __len__(self) -> int:
        return self._size

    def _grow(self) -> None:
        new_len = min(self.capacity, 2 * len(self._rewards))

        def grown(arr: np.ndarray) -> np.ndarray:
            res = np.empty((new_len, *arr.shape[1:]), dtype=arr.dtype)
            res[: len(arr)] = arr
            return res

        self._states = grown(self._states)
        self._actions = grown(self._actions)
        self._rewards = grown(self._rewards)
        self._next_states = grown(self._next_states)
        self._terminal = grown(self._terminal)
        self._truncated = grown(self._truncated)

    def push(self, transition: Transition) -> None:
        if (
            transition.state.shape != (self.state_dim,)
            or transition.next_state.shape != (self.state_dim,)
            or transition.action.shape != (self.action_dim,)
        ):
            raise StructuralError("Transition dimensions do not match the buffer.")

        for name, value in (
            ("state", transition.state),
            ("action", transition.action),
            ("reward", transition.reward),
            ("next_state", transition.next_state),
        ):
            if not np.all(np.isfinite(value)):
                raise NumericError(f"Transition has non-finite {name}.")

        if self._cursor >= len(self._rewards):
            self._grow()

        idx = self._cursor
        self._states[idx] = transition.state
        self._actions[idx] = transition.action
        self._rewards[idx] = transition.reward
        self._next_states[idx] = transition.next_state
        self._terminal[idx] = transition.terminal
        self._truncated[idx] = transition.truncated

        self._cursor = (self._cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _gather(self, indices: np.ndarray) -> Minibatch:
        return Minibatch(
            self._states[indices].copy(),
            self._actions[indices].copy(),
            self._rewards[indices].copy(),
            self._next_states[indices].copy(),
            self._terminal[indices].copy(),
            self._truncated[indices].copy(),
        )

    def sample_minibatch(self, count: int, rng: np.random.Generator) -> Minibatch:
        """Uniform draws with replacement over the stored transitions."""

        if count < 1:
            raise PreconditionError("Minibatch has to contain at least one transition.")

        if self._size < count:
            raise PreconditionError(f"Buffer holds {self._size} transitions, {count} requested.")

        return self._gather(rng.integers(0, self._size, size=count))

    def ordered_indices(self) -> np.ndarray:
        """Storage indices from the oldest to the newest transition."""

        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self._size) + self._cursor) % self.capacity

    def transitions(self) -> list[Transition]:
        batch = self._gather(self.ordered_indices())
        return [
            Transition(s, a, r, ns, bool(te), bool(tr))
            for s, a, r, ns, te, tr in zip(
                batch.states, batch.actions, batch.rewards, batch.next_states, batch.terminal, batch.truncated
            )
        ]

    def export_csv(self, path: str | os.PathLike) -> None:
        batch = self._gather(self.ordered_indices())

        header = (
            [f"state_{i}" for i in range(self.state_dim)]
            + [f"action_{i}" for i in range(self.action_dim)]
            + ["reward"]
            + [f"next_state_{i}" for i in range(self.state_dim)]
            + ["terminal", "truncated"]
        )

        table = np.column_stack(
            [
                batch.states,
                batch.actions,
                batch.rewards,
                batch.next_states,
                batch.terminal.astype(np.float64),
                batch.truncated.astype(np.float64),
            ]
        )

        fmt = ["%.17g"] * (table.shape[1] - 2) + ["%d", "%d"]
        np.savetxt(path, table, fmt=fmt, delimiter=",", header=",".join(header), comments="")
