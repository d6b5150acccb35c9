from dataclasses import dataclass, field
from typing import Optional

from dataclasses_jsonschema import JsonSchemaMixin


@dataclass
class TrainMetrics(JsonSchemaMixin):
    """Train-step statistics averaged over one flush interval.

    Returns are in unscaled reward units.
    """

    env_step: int
    critic_loss: float
    actor_grad_norm_pre: float
    actor_grad_norm_post: float
    policy_entropy: float
    train_steps: int = 0
    episode_return: Optional[float] = None
    wall_clock: Optional[float] = None


@dataclass
class EvalMetrics(JsonSchemaMixin):
    env_step: int
    mean_return: float
    std_return: float
    returns: list[float] = field(default_factory=list)
