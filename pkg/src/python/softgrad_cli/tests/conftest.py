import os
from typing import Optional

import pytest

from softgrad_cli.scripts.softgrad import main

# a training run that finishes within seconds
SMALL_RUN = [
    "hidden_size=16",
    "batch_size=16",
    "action_samples=4",
    "warmup=32",
    "total_env_steps=120",
    "train_steps_per_env_step=1",
    "buffer_capacity=1000",
    "log_interval=40",
    "eval_interval=40",
    "eval_episodes=3",
    "checkpoint_interval=60",
]


@pytest.fixture()
def out_root(tmp_path, monkeypatch) -> str:
    root = str(tmp_path / "runs")
    monkeypatch.setenv("SOFTGRAD_OUT", root)
    return root


def train(root: str, *overrides: str, seed: Optional[int] = None, run_name: Optional[str] = None) -> str:
    """Runs a small bandit training and returns its run directory."""

    args = ["train", "--env", "continuous-bandit"]
    if seed is not None:
        args += ["--seed", str(seed)]
    if run_name is not None:
        args += ["--run-name", run_name]

    before = set(os.listdir(root)) if os.path.isdir(root) else set()
    assert main([*args, *SMALL_RUN, *overrides]) == 0
    (created,) = set(os.listdir(root)) - before
    return os.path.join(root, created)
