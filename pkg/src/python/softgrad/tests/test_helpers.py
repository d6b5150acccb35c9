import logging

import pytest

from softgrad import env, json
from softgrad.exceptions import PreconditionError, SoftgradException
from softgrad.exceptions.helpers import handle

logger = logging.getLogger(__name__)


@handle(PreconditionError, logger, (KeyError, ValueError), "Lookup failed.")
def lookup(data: dict[str, int], key: str) -> int:
    return int(data[key])


def test_handle() -> None:
    assert lookup({"a": 1}, "a") == 1

    with pytest.raises(PreconditionError, match="Lookup failed."):
        lookup({}, "a")

    with pytest.raises(TypeError):
        lookup({"a": None}, "a")  # type: ignore[dict-item]


def test_json_lines() -> None:
    content = '{"kind": "eval", "value": 0.1}\n\n{"kind": "train"}\n'
    assert list(json.iter_lines(content)) == [{"kind": "eval", "value": 0.1}, {"kind": "train"}]

    with pytest.raises(json.JsonException):
        list(json.iter_lines("[1, 2]"))

    with pytest.raises(json.JsonException):
        json.loads("{")


def test_json_floats_round_trip() -> None:
    value = 0.1 + 0.2
    assert json.loads_type(json.dumps({"v": value}), dict)["v"] == value


def test_env(monkeypatch) -> None:
    monkeypatch.setenv("SOFTGRAD_TEST_FLAG", "true")
    monkeypatch.setenv("SOFTGRAD_TEST_INT", "12")
    monkeypatch.setenv("SOFTGRAD_TEST_BAD", "twelve")

    assert env.get_bool("SOFTGRAD_TEST_FLAG")
    assert not env.get_bool("SOFTGRAD_TEST_MISSING")
    assert env.get_int("SOFTGRAD_TEST_INT") == 12
    assert env.get_int("SOFTGRAD_TEST_MISSING", 3) == 3
    assert env.get_str("SOFTGRAD_TEST_MISSING", "x") == "x"

    with pytest.raises(env.SoftgradEnvException):
        env.get_int("SOFTGRAD_TEST_BAD")

    with pytest.raises(SoftgradException):
        env.get_str("SOFTGRAD_TEST_MISSING")
