"""Learning curves averaged over runs (seeds) of one environment."""

import os
from typing import NamedTuple, Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np

from softgrad import json
from softgrad.data.common import RecordKind
from softgrad.exceptions import ConfigurationError
from softgrad.exceptions.helpers import handle
from softgrad.logging import get_logger
from softgrad_cli.run import METRICS, read_manifest

logger = get_logger(__name__)

plt.switch_backend("Agg")
plt.rcParams["svg.hashsalt"] = "softgrad"


class RunEvaluations(NamedTuple):
    env: str
    returns: dict[int, float]
    baseline: Optional[float]


class Curve(NamedTuple):
    env: str
    steps: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    runs: int
    baseline: Optional[float]


@handle(ConfigurationError, logger, (OSError, json.JsonException, KeyError, TypeError), "Invalid metrics.")
def load_evaluations(run_dir: str) -> RunEvaluations:
    manifest = read_manifest(run_dir)

    with open(os.path.join(run_dir, METRICS)) as f:
        records = list(json.iter_lines(f.read()))

    returns = {int(r["env_step"]): float(r["mean_return"]) for r in records if r["kind"] == RecordKind.EVAL}
    baselines = [float(r["mean_return"]) for r in records if r["kind"] == RecordKind.BASELINE]

    return RunEvaluations(manifest.config.env, returns, baselines[0] if baselines else None)


def learning_curve(run_dirs: Sequence[str]) -> Curve:
    """Mean and spread of evaluation returns over the runs, at every step
    evaluated by all of them. No smoothing is applied."""

    if not run_dirs:
        raise ConfigurationError("At least one run directory is needed.")

    runs = [load_evaluations(run_dir) for run_dir in run_dirs]

    if len(envs := {run.env for run in runs}) > 1:
        raise ConfigurationError(f"Runs of different environments can't be averaged: {', '.join(sorted(envs))}.")

    steps = sorted(set.intersection(*(set(run.returns) for run in runs)))

    if not steps:
        raise ConfigurationError("Runs have no evaluation step in common.")

    if any(len(run.returns) != len(steps) for run in runs):
        logger.warning("Runs were evaluated at different steps, only the common ones are used.")

    table = np.array([[run.returns[step] for step in steps] for run in runs])
    baselines = [run.baseline for run in runs if run.baseline is not None]

    return Curve(
        runs[0].env,
        np.array(steps),
        table.mean(axis=0),
        table.std(axis=0),
        len(runs),
        float(np.mean(baselines)) if baselines else None,
    )


def write_csv(curve: Curve, path: str) -> None:
    np.savetxt(
        path,
        np.column_stack([curve.steps, curve.mean, curve.std]),
        fmt=["%d", "%.17g", "%.17g"],
        delimiter=",",
        header="env_step,mean_return,std_return",
        comments="",
    )


def write_svg(curve: Curve, path: str) -> None:
    fig, ax = plt.subplots(1, 1, figsize=(8, 5))

    ax.plot(curve.steps, curve.mean, label=f"mean of {curve.runs} run(s)")
    if curve.runs > 1:
        ax.fill_between(curve.steps, curve.mean - curve.std, curve.mean + curve.std, alpha=0.2)

    if curve.baseline is not None:
        ax.axhline(curve.baseline, linestyle="--", color="gray", label="random policy")

    ax.set_xlabel("environment steps")
    ax.set_ylabel("evaluation return")
    ax.set_title(curve.env)
    ax.grid(True, alpha=0.3)
    ax.legend()

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_runs(run_dirs: Sequence[str], output: str) -> tuple[str, str]:
    """Writes ``output``.csv and ``output``.svg.

    :return: Paths of the CSV and SVG files.
    """

    curve = learning_curve(run_dirs)

    if parent := os.path.dirname(output):
        os.makedirs(parent, exist_ok=True)

    csv_path, svg_path = f"{output}.csv", f"{output}.svg"

    try:
        write_csv(curve, csv_path)
        write_svg(curve, svg_path)
    except OSError as e:
        raise ConfigurationError(f"Failed to write the learning curve: {str(e)}") from e

    logger.info(f"Learning curve of {curve.runs} run(s) on {curve.env} written to {csv_path} and {svg_path}.")
    return csv_path, svg_path
