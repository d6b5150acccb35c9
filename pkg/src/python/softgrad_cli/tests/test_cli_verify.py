import pytest

from softgrad.exceptions import ConfigurationError
from softgrad_cli.scripts.softgrad import main
from softgrad_cli.verify import CheckResult, run_suite


def test_gradcheck_suite(capsys) -> None:
    assert main(["verify", "gradcheck"]) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines
    assert all(line.endswith("PASS") for line in lines)


def test_algebra_suite() -> None:
    results = run_suite("algebra")

    assert results
    assert all(res.passed for res in results)


def test_unknown_suite() -> None:
    assert main(["verify", "nosuch"]) != 0

    with pytest.raises(ConfigurationError):
        run_suite("nosuch")


def test_check_result() -> None:
    assert CheckResult("a", 1.0, 1.0).passed
    assert not CheckResult("b", 1.5, 1.0).passed
    assert not CheckResult("c", float("nan"), 1.0).passed
    assert CheckResult("d", 0.5, 1.0).line() == "d: 5.000e-01 <= 1.000e+00 PASS"
