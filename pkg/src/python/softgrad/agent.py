from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional, Protocol

import numpy as np

from softgrad import json
from softgrad.critic import BackupBatch, SoftQ
from softgrad.data.checkpoint import AgentCheckpoint
from softgrad.data.common import Direction, RecordKind
from softgrad.data.config import AdamConfig, AgentConfig
from softgrad.data.metrics import EvalMetrics, TrainMetrics
from softgrad.environments import Environment
from softgrad.exceptions import NumericError, PreconditionError, StructuralError, TrainingAborted
from softgrad.exceptions.helpers import handle
from softgrad.logging import get_logger
from softgrad.nn import adam_step, clip_by_global_norm, global_norm
from softgrad.policy import GaussianPolicy, PolicyGradient
from softgrad.replay import ReplayBuffer, Transition

logger = get_logger(__name__)


class StochasticPolicy(Protocol):
    def sample_batch(self, states: np.ndarray, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        ...

    def weighted_score(self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray) -> Any:
        ...


class QFunction(Protocol):
    def q_values(self, states: np.ndarray, actions: np.ndarray, use_target: bool = False) -> np.ndarray:
        ...


def actor_gradient(
    policy: StochasticPolicy,
    critic: QFunction,
    states: np.ndarray,
    samples: int,
    tau: float,
    rng: np.random.Generator,
    baseline_constant: bool = True,
) -> Any:
    """Double-sampled soft policy gradient (ascent direction).

    (1/(N*M)) * sum_ij (Q(s_i, a_ij) - tau * log pi(a_ij|s_i) - tau) * grad log pi(a_ij|s_i),
    with a_ij drawn from the current policy and Q from the online critic.

    :param states: N states from the replay buffer (rows, or indices for tabular policies).
    :param samples: M actions per state.
    :param baseline_constant: Drop the constant -tau term when False (same expectation).
    """

    states = np.asarray(states)
    n = states.shape[0]

    actions, log_probs = policy.sample_batch(states, samples, rng)
    repeated = np.repeat(states[:, None, ...], samples, axis=1)
    q = critic.q_values(repeated, actions)

    bad = ~(np.isfinite(q) & np.isfinite(log_probs))
    if np.any(bad):
        raise NumericError(f"Non-finite Q or log-probability at (state, sample) {np.argwhere(bad).tolist()}.")

    weights = q - tau * log_probs
    if baseline_constant:
        weights = weights - tau

    flat_states = repeated.reshape(n * samples, *states.shape[1:])
    flat_actions = actions.reshape(n * samples, *actions.shape[2:])
    return policy.weighted_score(flat_states, flat_actions, weights.reshape(-1) / (n * samples))


class ActorUpdate(NamedTuple):
    norm_pre: float
    norm_post: float


def clipped_actor_update(
    policy: GaussianPolicy, gradient: PolicyGradient, clip_norm: float, adam: AdamConfig
) -> ActorUpdate:
    """Clips the gradient by its global norm and takes an Adam ascent step."""

    norm_pre = global_norm(gradient)
    clipped = PolicyGradient(*clip_by_global_norm(gradient, clip_norm))

    for net, grad in zip(policy.networks, clipped):
        adam_step(net, grad, adam, Direction.ASCEND)

    return ActorUpdate(norm_pre, global_norm(clipped))


class TrainStepStats(NamedTuple):
    critic_loss: float
    actor_grad_norm_pre: float
    actor_grad_norm_post: float
    policy_entropy: float


@dataclass
class DspgAgent:
    config: AgentConfig
    policy: GaussianPolicy
    target_policy: GaussianPolicy
    critic: SoftQ
    env_step: int = 0

    @classmethod
    def create(cls, state_dim: int, action_dim: int, config: AgentConfig, rng: np.random.Generator) -> DspgAgent:
        policy = GaussianPolicy.create(state_dim, action_dim, config.hidden_sizes, rng, config.std_floor)
        critic = SoftQ.create(state_dim, action_dim, config.hidden_sizes, rng)
        return cls(config, policy, policy.clone(), critic)

    def to_checkpoint(self) -> AgentCheckpoint:
        return AgentCheckpoint(
            self.config.env,
            self.env_step,
            self.config,
            self.policy.to_record(),
            self.target_policy.to_record(),
            self.critic.to_record(),
        )

    @classmethod
    def from_checkpoint(cls, checkpoint: AgentCheckpoint) -> DspgAgent:
        policy = GaussianPolicy.from_record(checkpoint.policy)
        return cls(
            checkpoint.config,
            policy,
            GaussianPolicy.from_record(checkpoint.target_policy),
            SoftQ.from_record(checkpoint.critic, policy.state_dim),
            checkpoint.env_step,
        )


@handle(TrainingAborted, logger, OSError, "Failed to write checkpoint.")
def save_checkpoint(agent: DspgAgent, path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        f.write(json.dumps(agent.to_checkpoint().to_dict()))


@handle(PreconditionError, logger, (OSError, json.JsonException, ValueError, KeyError), "Invalid checkpoint.")
def load_checkpoint(path: str | os.PathLike) -> DspgAgent:
    with open(path) as f:
        data = json.loads_type(f.read(), dict)
    return DspgAgent.from_checkpoint(AgentCheckpoint.from_dict(data, validate=False))


def train_step(agent: DspgAgent, buffer: ReplayBuffer, rng: np.random.Generator) -> TrainStepStats:
    """One critic update, one clipped actor update and the target updates."""

    cfg = agent.config

    if len(buffer) < cfg.batch_size:
        raise PreconditionError(f"Buffer holds {len(buffer)} transitions, minibatch needs {cfg.batch_size}.")

    batch = buffer.sample_minibatch(cfg.batch_size, rng)

    next_actions, next_log_probs = agent.target_policy.sample_batch(batch.next_states, cfg.action_samples, rng)
    next_entropy = agent.target_policy.entropy_batch(batch.next_states) if cfg.analytic_entropy else None

    targets = agent.critic.sampled_backup(
        BackupBatch(batch.rewards, batch.next_states, batch.terminal, next_actions, next_log_probs, next_entropy),
        cfg.gamma,
        cfg.tau,
    )

    critic_loss, critic_grad = agent.critic.soft_loss(batch.states, batch.actions, targets)
    agent.critic.update(critic_grad, cfg.critic_adam())

    grad = actor_gradient(agent.policy, agent.critic, batch.states, cfg.action_samples, cfg.tau, rng)
    update = clipped_actor_update(agent.policy, grad, cfg.clip_norm, cfg.actor_adam())

    agent.critic.sync_target(cfg.polyak_alpha)
    agent.target_policy.polyak_from(agent.policy, cfg.polyak_alpha)

    return TrainStepStats(
        critic_loss,
        update.norm_pre,
        update.norm_post,
        float(np.mean(agent.policy.entropy_batch(batch.states))),
    )


def rollout_return(env: Environment, act: Any) -> float:
    state = env.reset()
    total = 0.0

    while True:
        res = env.step(act(state))
        total += res.reward
        if res.terminal or res.truncated:
            return total
        state = res.next_state


def evaluate(
    policy: GaussianPolicy, env: Environment, episodes: int, rng: Optional[np.random.Generator] = None
) -> tuple[float, float, list[float]]:
    """Mean-action rollouts, returns in unscaled reward units.

    With rng given, actions are sampled from the policy instead.
    """

    if episodes < 1:
        raise PreconditionError("At least one evaluation episode is needed.")

    if (policy.state_dim, policy.action_dim) != (env.spec.state_dim, env.spec.action_dim):
        raise StructuralError(
            f"Policy maps {policy.state_dim} to {policy.action_dim} dimension(s), "
            f"{env.spec.name} needs {env.spec.state_dim} to {env.spec.action_dim}."
        )

    if rng is None:
        returns = [rollout_return(env, policy.mean_action) for _ in range(episodes)]
    else:
        sampler = rng
        returns = [rollout_return(env, lambda s: policy.sample(s, 1, sampler)[0].action) for _ in range(episodes)]

    return float(np.mean(returns)), float(np.std(returns)), returns


def random_baseline(env: Environment, episodes: int, rng: np.random.Generator) -> tuple[float, float, list[float]]:
    """Scripted policy acting uniformly within the action bounds."""

    low, high = np.array(env.spec.action_low), np.array(env.spec.action_high)
    returns = [rollout_return(env, lambda _: rng.uniform(low, high)) for _ in range(episodes)]
    return float(np.mean(returns)), float(np.std(returns)), returns


class TrainingResult(NamedTuple):
    agent: DspgAgent
    records: list[dict[str, Any]]


class _Accumulator:
    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.stats: list[TrainStepStats] = []
        self.episode_returns: list[float] = []

    def metrics(self, env_step: int, started: Optional[float]) -> TrainMetrics:
        arr = np.array(self.stats) if self.stats else np.full((1, 4), math.nan)
        return TrainMetrics(
            env_step=env_step,
            critic_loss=float(np.mean(arr[:, 0])),
            actor_grad_norm_pre=float(np.mean(arr[:, 1])),
            actor_grad_norm_post=float(np.mean(arr[:, 2])),
            policy_entropy=float(np.mean(arr[:, 3])),
            train_steps=len(self.stats),
            episode_return=float(np.mean(self.episode_returns)) if self.episode_returns else None,
            wall_clock=None if started is None else time.monotonic() - started,
        )


def _record(kind: RecordKind, data: dict[str, Any]) -> dict[str, Any]:
    # NaN is not a JSON value
    return {"kind": kind.value, **{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in data.items()}}


def run_training(
    env: Environment,
    config: AgentConfig,
    output_dir: None | str | os.PathLike = None,
    record_wall_clock: bool = False,
    env_factory: None | Callable[[int], Environment] = None,
) -> TrainingResult:
    """Runs the whole off-policy training loop.

    Every environment step samples an action from the current policy, stores the
    reward-scaled transition and, once the buffer holds max(N, warmup) transitions,
    performs ``train_steps_per_env_step`` train steps. The result is deterministic
    given the config (wall clock time is only recorded on request).

    :param output_dir: If given, metrics.jsonl and checkpoints/ are written there.
    :param env_factory: Builds the evaluation and baseline environments from a seed,
        defaults to the class of env.
    :return:
    """

    config.check()

    seeds = np.random.SeedSequence(config.seed).spawn(4)
    rng = np.random.default_rng(seeds[0])
    factory = env_factory or type(env)
    eval_env = factory(int(seeds[1].generate_state(1)[0]))
    baseline_env = factory(int(seeds[2].generate_state(1)[0]))
    baseline_rng = np.random.default_rng(seeds[3])

    spec = env.spec
    agent = DspgAgent.create(spec.state_dim, spec.action_dim, config, rng)
    buffer = ReplayBuffer(spec.state_dim, spec.action_dim, config.buffer_capacity)
    records: list[dict[str, Any]] = []

    metrics_file = None
    checkpoint_dir = None

    if output_dir is not None:
        checkpoint_dir = os.path.join(output_dir, "checkpoints")
        os.makedirs(checkpoint_dir, exist_ok=True)
        metrics_file = open(os.path.join(output_dir, "metrics.jsonl"), "w")

    def emit(record: dict[str, Any]) -> None:
        records.append(record)
        if metrics_file is not None:
            metrics_file.write(json.dumps(record) + "\n")
            metrics_file.flush()

    def checkpoint(name: str) -> None:
        if checkpoint_dir is not None:
            save_checkpoint(agent, os.path.join(checkpoint_dir, name))
            logger.debug(f"Checkpoint {name} written.")

    started = time.monotonic() if record_wall_clock else None
    acc = _Accumulator()
    start_training = max(config.batch_size, config.warmup)

    try:
        checkpoint(f"step_{0:08d}.json")

        mean, std, returns = random_baseline(baseline_env, config.eval_episodes, baseline_rng)
        emit(_record(RecordKind.BASELINE, EvalMetrics(0, mean, std, returns).to_dict()))
        logger.info(f"Random policy baseline on {spec.name}: {mean:.3f} ± {std:.3f}.")

        state = env.reset()
        episode_return = 0.0

        for step in range(1, config.total_env_steps + 1):
            action = agent.policy.sample(state, 1, rng)[0].action

            try:
                res = env.step(action)
            except Exception as e:
                checkpoint(f"step_{step:08d}.json")
                raise TrainingAborted(f"Environment failed at step {step}: {str(e)}") from e

            buffer.push(
                Transition(
                    state, action, config.reward_scale * res.reward, res.next_state, res.terminal, res.truncated
                )
            )
            episode_return += res.reward
            agent.env_step = step

            if res.terminal or res.truncated:
                acc.episode_returns.append(episode_return)
                episode_return = 0.0
                state = env.reset()
            else:
                state = res.next_state

            if len(buffer) >= start_training:
                for _ in range(config.train_steps_per_env_step):
                    acc.stats.append(train_step(agent, buffer, rng))

            if step % config.log_interval == 0:
                metrics = acc.metrics(step, started)
                emit(_record(RecordKind.TRAIN, metrics.to_dict()))
                acc.reset()
                logger.debug(f"Step {step}: critic loss {metrics.critic_loss:.4f}.")

            if step % config.eval_interval == 0 or step == config.total_env_steps:
                mean, std, returns = evaluate(agent.policy, eval_env, config.eval_episodes)
                emit(_record(RecordKind.EVAL, EvalMetrics(step, mean, std, returns).to_dict()))
                logger.info(f"Step {step}/{config.total_env_steps}: evaluation return {mean:.3f} ± {std:.3f}.")

            if step % config.checkpoint_interval == 0:
                checkpoint(f"step_{step:08d}.json")

        checkpoint("final.json")

    finally:
        if metrics_file is not None:
            metrics_file.close()

    return TrainingResult(agent, records)
