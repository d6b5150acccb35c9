from dataclasses import dataclass, field

from dataclasses_jsonschema import JsonSchemaMixin

from softgrad.data.config import AgentConfig

FORMAT_VERSION = 1


@dataclass
class LayerRecord(JsonSchemaMixin):
    """One dense layer, arrays stored row-major."""

    activation: str
    shape: list[int]
    weight: list[float]
    bias: list[float]
    weight_m: list[float] = field(default_factory=list)
    weight_v: list[float] = field(default_factory=list)
    bias_m: list[float] = field(default_factory=list)
    bias_v: list[float] = field(default_factory=list)


@dataclass
class MlpRecord(JsonSchemaMixin):
    layers: list[LayerRecord]
    adam_step: int = 0
    format_version: int = FORMAT_VERSION


@dataclass
class PolicyRecord(JsonSchemaMixin):
    state_dim: int
    action_dim: int
    std_floor: float
    trunk: MlpRecord
    mean_head: MlpRecord
    std_head: MlpRecord
    format_version: int = FORMAT_VERSION


@dataclass
class CriticRecord(JsonSchemaMixin):
    network: MlpRecord
    target: MlpRecord
    format_version: int = FORMAT_VERSION


@dataclass
class AgentCheckpoint(JsonSchemaMixin):
    env: str
    env_step: int
    config: AgentConfig
    policy: PolicyRecord
    target_policy: PolicyRecord
    critic: CriticRecord
    format_version: int = FORMAT_VERSION
