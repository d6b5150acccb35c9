import os

from softgrad.exceptions import SoftgradException


class SoftgradEnvException(SoftgradException):
    pass


def get_bool(variable_name: str, default: bool = False) -> bool:
    return os.getenv(variable_name, str(default)).lower() in ("true", "1")


def get_int(variable_name: str, default: None | int = None) -> int:
    val = os.getenv(variable_name, default)

    if val is None:
        raise SoftgradEnvException(f"Variable {variable_name} is not set.")

    try:
        return int(val)
    except ValueError:
        raise SoftgradEnvException(f"Variable {variable_name} has invalid value: {val}.")


def get_str(variable_name: str, default: None | str = None) -> str:
    val = os.getenv(variable_name, default)

    if not val:
        raise SoftgradEnvException(f"Variable {variable_name} is not set.")

    return val
