class SoftgradException(Exception):
    """All exceptions are derived from this one."""

    pass


class StructuralError(SoftgradException):
    """Shapes, dimensions or tapes do not fit together."""

    pass


class NumericError(SoftgradException):
    pass


class ConfigurationError(SoftgradException):
    def __init__(self, message: str, keys: None | list[str] = None) -> None:
        super().__init__(message)
        self.keys: list[str] = keys or []


class PreconditionError(SoftgradException):
    pass


class ProtocolError(SoftgradException):
    pass


class TrainingAborted(SoftgradException):
    pass
