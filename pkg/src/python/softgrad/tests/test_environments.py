import math

import numpy as np
import pytest

from softgrad.environments import ENVIRONMENTS, ContinuousBandit, PendulumSwingup, PointMass2d, make_env
from softgrad.exceptions import ConfigurationError, ProtocolError, StructuralError


def test_point_mass_rest_is_fixed_point() -> None:
    env = PointMass2d()
    env.set_state(np.array([0.5, -0.3, 0.0, 0.0]))

    res = env.step(np.zeros(2))

    assert res.next_state.tolist() == [0.5, -0.3, 0.0, 0.0]
    assert res.reward == pytest.approx(-(0.5**2 + 0.3**2))
    assert not res.terminal


def test_point_mass_wall() -> None:
    env = PointMass2d()
    env.set_state(np.array([1.99, 0.0, 1.0, 0.0]))

    res = env.step(np.array([1.0, 0.0]))

    assert res.next_state[0] == 2.0
    assert res.next_state[2] == 0.0


def test_bandit() -> None:
    env = ContinuousBandit()
    assert env.reset().tolist() == [0.0]

    res = env.step(np.zeros(1))
    assert res.reward == 0.0
    assert res.terminal and not res.truncated

    env.reset()
    assert env.step(np.array([5.0])).reward == -1.0


def test_pendulum_upright() -> None:
    env = PendulumSwingup()
    env.set_state(np.array([0.0, 0.0]))

    res = env.step(np.zeros(1))

    assert res.reward == 0.0
    assert res.next_state.tolist() == [1.0, 0.0, 0.0]


def test_pendulum_observation() -> None:
    env = PendulumSwingup(seed=4)
    obs = env.reset()

    assert obs.shape == (3,)
    assert obs[0] ** 2 + obs[1] ** 2 == pytest.approx(1.0)
    assert PendulumSwingup.wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_step_protocol() -> None:
    env = ContinuousBandit()

    with pytest.raises(ProtocolError):
        env.step(np.zeros(1))

    env.reset()
    env.step(np.zeros(1))

    with pytest.raises(ProtocolError):
        env.step(np.zeros(1))

    env.reset()
    with pytest.raises(StructuralError):
        env.step(np.zeros(2))


def test_truncation() -> None:
    env = PointMass2d()
    env.reset()

    results = [env.step(np.zeros(2)) for _ in range(env.spec.max_episode_length)]

    assert not any(r.truncated for r in results[:-1])
    assert results[-1].truncated and not results[-1].terminal

    with pytest.raises(ProtocolError):
        env.step(np.zeros(2))


@pytest.mark.parametrize("name", sorted(ENVIRONMENTS))
def test_rewards_within_bounds(name: str) -> None:
    env = make_env(name, 0)
    rng = np.random.default_rng(0)
    low, high = np.array(env.spec.action_low), np.array(env.spec.action_high)

    env.reset()
    for _ in range(500):
        res = env.step(rng.uniform(2 * low, 2 * high))
        assert env.spec.reward_min <= res.reward <= env.spec.reward_max
        if res.terminal or res.truncated:
            env.reset()


def test_same_seed_same_episode() -> None:
    assert make_env("point-mass-2d", 3).reset().tolist() == make_env("point-mass-2d", 3).reset().tolist()


def test_unknown_environment() -> None:
    with pytest.raises(ConfigurationError):
        make_env("cartpole")
