"""Run manifests: config hash, version, derived parameters, warnings.

A manifest records every derived number a run emitted, so that any value
in the CSV artifacts can be traced back to (and re-derived from) the
manifest alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RunConfig, serialize_config

__all__ = ["RunManifest", "config_hash", "write_manifest", "read_manifest"]


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical config serialization."""
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


@dataclass
class RunManifest:
    """Traceability record for one CLI command."""

    command: str
    config_hash: str
    version: str = __version__
    parameters: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    timestamp: str = ""

    def record(self, key: str, value) -> None:
        self.parameters[key] = _jsonable(value)

    def warn(self, message: str) -> None:
        self.warnings.append(str(message))


def write_manifest(manifest: RunManifest, path) -> None:
    if not manifest.timestamp:
        manifest.timestamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    with open(path, "w") as fh:
        json.dump(dataclasses.asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> RunManifest:
    with open(path) as fh:
        data = json.load(fh)
    return RunManifest(**data)
