"""Run manifests: enough provenance to reproduce any CLI output."""

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

SCHEMA_VERSION = 1


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict = field(default_factory=dict)  # role -> {path, sha256}
    seed: int | None = None
    version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": "pointfreq",
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "timestamp": self.timestamp,
        }


def build_manifest(command, config, input_paths=None, seed=None):
    inputs = {}
    for role, path in (input_paths or {}).items():
        if path is None:
            continue
        inputs[role] = {"path": str(path), "sha256": file_digest(path)}
    return RunManifest(command=command, config=config, inputs=inputs, seed=seed)


def write_text_atomic(path, text):
    """Write via a temp file + rename so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, payload):
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
