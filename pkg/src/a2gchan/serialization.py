"""JSON and CSV input/output."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from .curves import _jsonable
from .errors import InvalidParameterError
from .impairments import ImpairmentSet
from .presets import ChannelSetup
from .scenario import Scenario
from .wobbling import NoWobble, wobbling_from_dict

__all__ = ["setup_from_dict", "load_setup", "write_json", "write_csv", "file_sha256", "fmt"]


def fmt(x) -> str:
    """Scientific notation with nine significant digits."""
    if isinstance(x, str):
        return x
    return f"{float(x):.8e}"


def setup_from_dict(doc: dict) -> ChannelSetup:
    """Parse ``{"scenario": ..., "wobbling": ..., "impairments": ...}``.

    A bare scenario document is also accepted, with no wobbling and ideal
    hardware.
    """
    if not isinstance(doc, dict):
        raise InvalidParameterError("setup document must be a JSON object")
    if "scenario" not in doc:
        return ChannelSetup(Scenario.from_dict(doc), NoWobble(), ImpairmentSet())
    wob = doc.get("wobbling", {"kind": "none"})
    return ChannelSetup(Scenario.from_dict(doc["scenario"]), wobbling_from_dict(wob),
                        ImpairmentSet.from_dict(doc.get("impairments", {})))


def load_setup(path) -> ChannelSetup:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from None
    return setup_from_dict(doc)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
