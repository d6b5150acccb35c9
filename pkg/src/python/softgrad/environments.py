"""Small deterministic control problems.

point-mass-2d
    State (x, y, vx, vy), acceleration action in [-1, 1]^2, dt = 0.1, semi-implicit
    Euler. Positions are confined to [-2, 2]^2, hitting a wall zeroes the velocity
    along that axis. Goal at the origin, start uniform in [-1, 1]^2 at rest.
    Reward -|pos - goal|^2 - 0.01 |a|^2, horizon 200.

pendulum-swingup
    State (cos phi, sin phi, phi_dot) with phi = 0 upright, torque in [-2, 2],
    g = 10, m = 1, l = 1, dt = 0.05, |phi_dot| <= 8. Start phi ~ U[-pi, pi],
    phi_dot ~ U[-1, 1]. Reward -(phi^2 + 0.1 phi_dot^2 + 0.001 u^2) with phi wrapped
    to [-pi, pi), horizon 200.

continuous-bandit
    Single constant state [0], action in [-1, 1], reward -a^2, every step ends the
    episode with a true terminal.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from dataclasses_jsonschema import JsonSchemaMixin

from softgrad.exceptions import ConfigurationError, ProtocolError, StructuralError


@dataclass
class EnvSpec(JsonSchemaMixin):
    name: str
    state_dim: int
    action_dim: int
    action_low: list[float]
    action_high: list[float]
    max_episode_length: int
    reward_min: float
    reward_max: float

    def __post_init__(self) -> None:
        if len(self.action_low) != self.action_dim or len(self.action_high) != self.action_dim:
            raise StructuralError("Action bounds have to be given for every action dimension.")

        if not all(math.isfinite(v) for v in (*self.action_low, *self.action_high, self.reward_min, self.reward_max)):
            raise StructuralError("Bounds have to be finite.")

        if self.max_episode_length < 1:
            raise StructuralError("Episodes have to be at least one step long.")


class StepResult(NamedTuple):
    next_state: np.ndarray
    reward: float
    terminal: bool
    truncated: bool


class Environment(abc.ABC):
    """Episodic environment; reset has to be called before the first step and
    after an episode ends."""

    spec: EnvSpec

    def __init__(self, seed: int = 0) -> None:
        self._rng = np.random.default_rng(seed)
        self._state: None | np.ndarray = None
        self._t = 0
        self._done = True

    @abc.abstractmethod
    def _initial_state(self, rng: np.random.Generator) -> np.ndarray:
        pass

    @abc.abstractmethod
    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        """Pure transition: (next internal state, reward, terminal)."""

    def _observe(self, state: np.ndarray) -> np.ndarray:
        return state.copy()

    @property
    def state(self) -> np.ndarray:
        if self._state is None:
            raise ProtocolError("Environment was not reset.")
        return self._observe(self._state)

    def reset(self) -> np.ndarray:
        self._state = self._initial_state(self._rng)
        self._t = 0
        self._done = False
        return self._observe(self._state)

    def set_state(self, state: np.ndarray) -> None:
        """Starts an episode from the given internal state."""

        self._state = np.asarray(state, dtype=np.float64).copy()
        self._t = 0
        self._done = False

    def clip_action(self, action: np.ndarray) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64)

        if action.shape != (self.spec.action_dim,):
            raise StructuralError(f"Action has to have {self.spec.action_dim} dimension(s).")

        return np.clip(action, self.spec.action_low, self.spec.action_high)

    def step(self, action: np.ndarray) -> StepResult:
        if self._state is None or self._done:
            raise ProtocolError("Episode is over, reset the environment first.")

        next_state, reward, terminal = self._dynamics(self._state, self.clip_action(action))
        self._t += 1

        truncated = not terminal and self._t >= self.spec.max_episode_length
        self._state = next_state
        self._done = terminal or truncated

        return StepResult(self._observe(next_state), reward, terminal, truncated)


class PointMass2d(Environment):
    DT = 0.1
    BOUND = 2.0
    GOAL = np.zeros(2)

    spec = EnvSpec("point-mass-2d", 4, 2, [-1.0, -1.0], [1.0, 1.0], 200, -2 * 2.0**2 - 0.02, 0.0)

    def _initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([rng.uniform(-1.0, 1.0, size=2), np.zeros(2)])

    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        pos, vel = state[:2], state[2:]

        reward = -float(np.sum((pos - self.GOAL) ** 2)) - 0.01 * float(np.sum(action**2))

        vel = vel + self.DT * action
        pos = pos + self.DT * vel

        hit = np.abs(pos) > self.BOUND
        pos = np.clip(pos, -self.BOUND, self.BOUND)
        vel = np.where(hit, 0.0, vel)

        return np.concatenate([pos, vel]), reward, False


class PendulumSwingup(Environment):
    G = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0

    spec = EnvSpec(
        "pendulum-swingup",
        3,
        1,
        [-2.0],
        [2.0],
        200,
        -(math.pi**2 + 0.1 * 8.0**2 + 0.001 * 2.0**2),
        0.0,
    )

    @staticmethod
    def wrap_angle(phi: float) -> float:
        return ((phi + math.pi) % (2 * math.pi)) - math.pi

    def _initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])

    def _observe(self, state: np.ndarray) -> np.ndarray:
        phi, phi_dot = state
        return np.array([math.cos(phi), math.sin(phi), phi_dot])

    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        phi, phi_dot = float(state[0]), float(state[1])
        u = float(action[0])

        angle = self.wrap_angle(phi)
        reward = -(angle**2 + 0.1 * phi_dot**2 + 0.001 * u**2)

        phi_dot += (
            3.0 * self.G / (2.0 * self.LENGTH) * math.sin(phi) + 3.0 / (self.MASS * self.LENGTH**2) * u
        ) * self.DT
        phi_dot = min(max(phi_dot, -self.MAX_SPEED), self.MAX_SPEED)
        phi += phi_dot * self.DT

        return np.array([phi, phi_dot]), reward, False


class ContinuousBandit(Environment):
    spec = EnvSpec("continuous-bandit", 1, 1, [-1.0], [1.0], 1, -1.0, 0.0)

    def _initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(1)

    def _dynamics(self, state: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        return np.zeros(1), -float(action[0] ** 2), True


ENVIRONMENTS: dict[str, Callable[[int], Environment]] = {
    PointMass2d.spec.name: PointMass2d,
    PendulumSwingup.spec.name: PendulumSwingup,
    ContinuousBandit.spec.name: ContinuousBandit,
}


def make_env(name: str, seed: int = 0) -> Environment:
    try:
        return ENVIRONMENTS[name](seed)
    except KeyError:
        raise ConfigurationError(
            f"Unknown environment {name}, available: {', '.join(sorted(ENVIRONMENTS))}.", ["env"]
        ) from None
