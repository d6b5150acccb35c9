"""Flat ``key = value`` configuration files.

Values are YAML scalars, keys are AgentConfig field names. Every problem found
(unknown keys, unparsable or out-of-range values) is reported at once.
"""

import math
import os
from dataclasses import fields
from typing import Any, Iterable, Optional

import yaml

from softgrad.data.config import AgentConfig
from softgrad.environments import ENVIRONMENTS
from softgrad.exceptions import ConfigurationError

_FIELD_TYPES: dict[str, Any] = {f.name: f.type for f in fields(AgentConfig)}


def _coerce(value: Any, expected: type) -> Any:
    # bool is an int subclass, it must not pass as a number
    if expected is bool:
        if isinstance(value, bool):
            return value
        raise ValueError

    if isinstance(value, bool):
        raise ValueError

    if expected is int:
        if isinstance(value, int):
            return value
        # counts may be written as 5e4
        number = float(value) if isinstance(value, (float, str)) else math.nan
        if not number.is_integer():
            raise ValueError
        return int(number)

    if expected is float:
        # plain yaml reads 5e-5 as a string
        return float(value) if isinstance(value, (int, float)) else float(str(value))

    if value is None:
        raise ValueError
    return str(value)


def parse_assignments(lines: Iterable[str]) -> tuple[dict[str, str], list[str]]:
    """Splits ``key = value`` lines, comments and blank lines are skipped.

    :return: raw values by key and the malformed lines.
    """

    values: dict[str, str] = {}
    malformed: list[str] = []

    for line in lines:
        content = line.split("#", 1)[0].strip()

        if not content:
            continue

        key, sep, value = content.partition("=")
        if not sep or not key.strip():
            malformed.append(content)
            continue

        values[key.strip()] = value.strip()

    return values, malformed


def format_config(config: AgentConfig) -> str:
    lines: list[str] = []

    for name, value in config.to_dict().items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{name} = {value}")

    return "\n".join(lines) + "\n"


def build_config(
    path: None | str | os.PathLike = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    env: Optional[str] = None,
) -> AgentConfig:
    """Defaults < config file < seed/env arguments < key=value overrides."""

    raw: dict[str, str] = {}
    offenders: list[str] = []

    if path is not None:
        try:
            with open(path) as f:
                file_values, malformed = parse_assignments(f.readlines())
        except OSError as e:
            raise ConfigurationError(f"Can't read config file {path}: {str(e)}.") from e
        raw.update(file_values)
        offenders.extend(malformed)

    if seed is not None:
        raw["seed"] = str(seed)
    if env is not None:
        raw["env"] = env

    override_values, malformed = parse_assignments(overrides)
    raw.update(override_values)
    offenders.extend(malformed)

    values: dict[str, Any] = {}

    for key, text in raw.items():
        if key not in _FIELD_TYPES:
            offenders.append(key)
            continue

        try:
            values[key] = _coerce(yaml.safe_load(text) if text else None, _FIELD_TYPES[key])
        except (yaml.YAMLError, ValueError):
            offenders.append(key)

    if offenders:
        raise ConfigurationError(f"Invalid configuration key(s): {', '.join(offenders)}.", offenders)

    config = AgentConfig(**values)
    invalid = config.invalid_fields()

    if config.env not in ENVIRONMENTS:
        invalid.append("env")

    if invalid:
        raise ConfigurationError(f"Invalid configuration value(s): {', '.join(invalid)}.", invalid)

    return config
