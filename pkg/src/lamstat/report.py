"""Report documents: one JSON object per run.

Floats are written with ``repr`` precision, so every number parses back to
the identical double. ``wall_time_s`` is the only field allowed to differ
between reruns; ``normalize`` strips it for golden-file comparisons.
"""

from __future__ import annotations

import json

from . import __version__

TOOL = "lamstat"
TIMING_KEY = "wall_time_s"


def build(command: str, config: dict, payload: dict, wall_time: float | None = None) -> dict:
    doc = {"tool": TOOL, "version": __version__, "command": command, "config": config, "payload": payload}
    if wall_time is not None:
        doc[TIMING_KEY] = wall_time
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def normalize(text: str) -> str:
    """Drop the timing field and re-render canonically."""
    doc = loads(text)
    doc.pop(TIMING_KEY, None)
    return dumps(doc)


def payload_bytes(text: str) -> bytes:
    return json.dumps(loads(text)["payload"], sort_keys=True, allow_nan=False).encode()
