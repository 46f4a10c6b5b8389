"""Run manifests and deterministic CSV artifact writers.

Every table a run emits starts with a ``# manifest: <digest>`` comment tying
it to the run that produced it.  The digest covers the reproducibility core
(command, config text, input data digest, seed, engine version) and excludes
wall-clock timings, so two runs with identical inputs write byte-identical
tables even when their speeds differ.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field


@dataclass
class RunManifest:
    command: str
    config_text: str
    input_digest: str
    seed: int
    version: str
    timings: dict = field(default_factory=dict)


def manifest_digest(man: RunManifest) -> str:
    core = {
        "command": man.command,
        "config_text": man.config_text,
        "input_digest": man.input_digest,
        "seed": man.seed,
        "version": man.version,
    }
    blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def input_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(man: RunManifest, path) -> None:
    blob = {
        "command": man.command,
        "config_text": man.config_text,
        "input_digest": man.input_digest,
        "seed": man.seed,
        "version": man.version,
        "digest": manifest_digest(man),
        "timings": man.timings,
    }
    with open(path, "w") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _render(cell) -> str:
    # repr gives the shortest float text that round-trips exactly
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def write_table(path, digest: str, header, rows) -> None:
    lines = [f"# manifest: {digest}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_render(c) for c in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Read back a table written by :func:`write_table`.

    Returns (digest, header, rows-of-strings); numeric parsing is left to
    the caller since column types vary by artifact.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    digest = lines[0].split(":", 1)[1].strip()
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return digest, header, rows
