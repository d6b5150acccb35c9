from dataclasses import dataclass, fields
from typing import Any

from dataclasses_jsonschema import JsonSchemaMixin

from softgrad.exceptions import ConfigurationError


@dataclass
class AdamConfig(JsonSchemaMixin):
    """Adam hyperparameters.

    Only learning rates are given for the actor and critic, betas and
    epsilon are the usual defaults.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        invalid: list[str] = []

        # zero learning rate is allowed, it freezes parameters while moments keep updating
        if not self.learning_rate >= 0:
            invalid.append("learning_rate")
        if not 0 <= self.beta1 < 1:
            invalid.append("beta1")
        if not 0 <= self.beta2 < 1:
            invalid.append("beta2")
        if not self.epsilon > 0:
            invalid.append("epsilon")

        if invalid:
            raise ConfigurationError(f"Invalid Adam configuration: {', '.join(invalid)}.", invalid)


@dataclass
class AgentConfig(JsonSchemaMixin):
    """Hyperparameters of the whole training run.

    Defaults follow the published experimental setup (γ=0.99, α=0.01, N=100, M=64,
    4 train steps per interaction, reward scaled by 5, learning rates 5e-5/5e-4),
    scaled down to desk-size run lengths. The published networks have two hidden
    layers of 512 units (hidden_size=512); the small environments here use 64.
    """

    env: str = "point-mass-2d"
    gamma: float = 0.99
    tau: float = 1.0
    clip_norm: float = 5.0
    batch_size: int = 100
    action_samples: int = 64
    train_steps_per_env_step: int = 4
    polyak_alpha: float = 0.01
    actor_lr: float = 5e-5
    critic_lr: float = 5e-4
    reward_scale: float = 5.0
    buffer_capacity: int = 3_000_000
    warmup: int = 1000
    total_env_steps: int = 50_000
    seed: int = 0
    hidden_size: int = 64
    hidden_layers: int = 2
    std_floor: float = 1e-3
    eval_interval: int = 5000
    eval_episodes: int = 10
    log_interval: int = 1000
    checkpoint_interval: int = 10_000
    analytic_entropy: bool = False

    def invalid_fields(self) -> list[str]:
        checks: dict[str, bool] = {
            "gamma": 0 <= self.gamma < 1,
            "tau": self.tau >= 0,
            "clip_norm": self.clip_norm > 0,
            "batch_size": self.batch_size >= 1,
            "action_samples": self.action_samples >= 1,
            "train_steps_per_env_step": self.train_steps_per_env_step >= 1,
            "polyak_alpha": 0 <= self.polyak_alpha <= 1,
            "actor_lr": self.actor_lr >= 0,
            "critic_lr": self.critic_lr >= 0,
            "reward_scale": self.reward_scale > 0,
            # training starts once the buffer holds max(N, warmup) transitions
            "buffer_capacity": self.buffer_capacity >= max(self.batch_size, self.warmup),
            "warmup": self.warmup >= 0,
            "total_env_steps": self.total_env_steps >= 0,
            "hidden_size": self.hidden_size >= 1,
            "hidden_layers": self.hidden_layers >= 1,
            "std_floor": 0 < self.std_floor < 1,
            "eval_interval": self.eval_interval >= 1,
            "eval_episodes": self.eval_episodes >= 1,
            "log_interval": self.log_interval >= 1,
            "checkpoint_interval": self.checkpoint_interval >= 1,
        }
        return [key for key, ok in checks.items() if not ok]

    def check(self) -> None:
        if invalid := self.invalid_fields():
            raise ConfigurationError(f"Invalid value(s) of {', '.join(invalid)}.", invalid)

    def actor_adam(self) -> AdamConfig:
        return AdamConfig(learning_rate=self.actor_lr)

    def critic_adam(self) -> AdamConfig:
        return AdamConfig(learning_rate=self.critic_lr)

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return (self.hidden_size,) * self.hidden_layers

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def updated(self, **changes: Any) -> "AgentConfig":
        data = self.to_dict()
        data.update(changes)
        return AgentConfig.from_dict(data)
