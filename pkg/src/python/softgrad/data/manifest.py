from dataclasses import dataclass
from datetime import datetime
from typing import Optional

from dataclasses_jsonschema import JsonSchemaMixin

from softgrad.data.config import AgentConfig


@dataclass
class RunManifest(JsonSchemaMixin):
    """Describes one training run directory."""

    config: AgentConfig
    seed: int
    version: str
    output_dir: str
    started: datetime
    finished: Optional[datetime] = None
    final_checkpoint: Optional[str] = None
