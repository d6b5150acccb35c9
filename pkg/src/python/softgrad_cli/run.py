import os
from datetime import datetime, timezone
from typing import Optional

import softgrad
from softgrad import env, json
from softgrad.data.config import AgentConfig
from softgrad.data.manifest import RunManifest
from softgrad.exceptions import ConfigurationError
from softgrad.exceptions.helpers import handle
from softgrad.logging import get_logger
from softgrad_cli.config import format_config

logger = get_logger(__name__)

OUTPUT_ROOT_VARIABLE = "SOFTGRAD_OUT"
DEFAULT_OUTPUT_ROOT = "softgrad_runs"

MANIFEST = "manifest.json"
CONFIG = "config.txt"
METRICS = "metrics.jsonl"
CHECKPOINTS = "checkpoints"
FINAL_CHECKPOINT = os.path.join(CHECKPOINTS, "final.json")


def output_root() -> str:
    return env.get_str(OUTPUT_ROOT_VARIABLE, DEFAULT_OUTPUT_ROOT)


def default_run_name(config: AgentConfig) -> str:
    return f"{config.env}_seed{config.seed}"


def create_run_dir(root: str, name: str) -> str:
    """Creates a fresh directory, existing runs are never overwritten."""

    path = os.path.join(root, name)
    suffix = 0

    while os.path.exists(path):
        suffix += 1
        path = os.path.join(root, f"{name}_{suffix}")

    os.makedirs(path)
    return path


def now() -> datetime:
    return datetime.now(timezone.utc)


def new_manifest(config: AgentConfig, output_dir: str) -> RunManifest:
    return RunManifest(config, config.seed, softgrad.version(), output_dir, now())


@handle(ConfigurationError, logger, OSError, "Failed to write run files.")
def write_manifest(manifest: RunManifest) -> None:
    with open(os.path.join(manifest.output_dir, MANIFEST), "w") as f:
        f.write(json.dumps(manifest.to_dict()))


@handle(ConfigurationError, logger, OSError, "Failed to write run files.")
def write_config(config: AgentConfig, output_dir: str) -> None:
    with open(os.path.join(output_dir, CONFIG), "w") as f:
        f.write(format_config(config))


@handle(ConfigurationError, logger, (OSError, json.JsonException, KeyError, ValueError), "Not a run directory.")
def read_manifest(run_dir: str) -> RunManifest:
    with open(os.path.join(run_dir, MANIFEST)) as f:
        return RunManifest.from_dict(json.loads_type(f.read(), dict), validate=False)


def finish_manifest(manifest: RunManifest, final_checkpoint: Optional[str] = FINAL_CHECKPOINT) -> RunManifest:
    manifest.finished = now()
    manifest.final_checkpoint = final_checkpoint
    write_manifest(manifest)
    return manifest
