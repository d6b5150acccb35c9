import pytest

from softgrad.data.checkpoint import AgentCheckpoint
from softgrad.data.config import AdamConfig, AgentConfig
from softgrad.exceptions import ConfigurationError


def test_defaults_are_valid() -> None:
    config = AgentConfig()

    assert config.invalid_fields() == []
    assert config.hidden_sizes == (64, 64)
    assert config.actor_adam() == AdamConfig(learning_rate=5e-5)
    assert config.critic_adam() == AdamConfig(learning_rate=5e-4)


def test_invalid_fields_are_all_listed() -> None:
    config = AgentConfig(gamma=1.0, clip_norm=0.0, batch_size=10, buffer_capacity=5)

    assert config.invalid_fields() == ["gamma", "clip_norm", "buffer_capacity"]

    with pytest.raises(ConfigurationError) as exc_info:
        config.check()

    assert exc_info.value.keys == ["gamma", "clip_norm", "buffer_capacity"]


def test_buffer_has_to_reach_warmup() -> None:
    assert AgentConfig(warmup=200, buffer_capacity=100, total_env_steps=500).invalid_fields() == ["buffer_capacity"]
    assert AgentConfig(warmup=10, batch_size=100, buffer_capacity=99).invalid_fields() == ["buffer_capacity"]
    assert AgentConfig(warmup=200, buffer_capacity=200).invalid_fields() == []

    with pytest.raises(ConfigurationError) as exc_info:
        AgentConfig(warmup=200, buffer_capacity=100).check()

    assert exc_info.value.keys == ["buffer_capacity"]


def test_boundaries_are_allowed() -> None:
    config = AgentConfig(gamma=0.0, tau=0.0, polyak_alpha=0.0, actor_lr=0.0, critic_lr=0.0, total_env_steps=0)
    assert config.invalid_fields() == []

    assert AgentConfig(polyak_alpha=1.0).invalid_fields() == []


def test_adam_config() -> None:
    with pytest.raises(ConfigurationError) as exc_info:
        AdamConfig(learning_rate=-1.0, beta1=1.0, epsilon=0.0)

    assert exc_info.value.keys == ["learning_rate", "beta1", "epsilon"]


def test_updated() -> None:
    config = AgentConfig().updated(seed=3, env="continuous-bandit")

    assert config.seed == 3
    assert config.env == "continuous-bandit"
    assert AgentConfig.from_dict(config.to_dict()) == config


def test_checkpoint_schema() -> None:
    schema = AgentCheckpoint.json_schema()

    assert {"env", "env_step", "config", "policy", "target_policy", "critic"} <= set(schema["required"])
