from enum import Enum, unique


@unique
class StrEnum(str, Enum):
    @classmethod
    def set(cls) -> set[str]:
        return set(map(lambda c: c.value, cls))  # type: ignore


class Activation(StrEnum):
    RELU: str = "relu"
    IDENTITY: str = "identity"
    SIGMOID: str = "sigmoid"


class Direction(StrEnum):
    ASCEND: str = "ascend"
    DESCEND: str = "descend"


class RecordKind(StrEnum):
    BASELINE: str = "baseline"
    TRAIN: str = "train"
    EVAL: str = "eval"
