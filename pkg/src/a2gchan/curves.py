"""Containers for sampled metric curves and scalar coherence results."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .scenario import Atom

__all__ = ["AXES", "MetricCurve", "CoherenceResult", "digest"]

AXES = {
    "dt_s": "lag dt [s]",
    "df_hz": "frequency lag df [Hz]",
    "tau_s": "delay tau [s]",
    "f_hz": "frequency f [Hz]",
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def digest(*parts) -> str:
    """Short stable hash of JSON-serialisable inputs."""
    blob = json.dumps(_jsonable(list(parts)), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class MetricCurve:
    """A sampled 1-D metric with optional Dirac atoms kept apart from the samples."""

    axis: str
    x: np.ndarray
    values: np.ndarray
    atoms: tuple[Atom, ...] = ()
    meta: dict = field(default_factory=dict)
    errors: np.ndarray | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidParameterError(f"unknown axis {self.axis!r}")
        x = np.asarray(self.x, float)
        v = np.asarray(self.values)
        if x.ndim != 1 or v.shape[-1:] != x.shape:
            raise InvalidParameterError("curve values must be sampled on the x grid")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise InvalidParameterError("curve x grid must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v.astype(complex))

    def to_dict(self) -> dict:
        d = {
            "axis": self.axis,
            "x": self.x.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
            "atoms": [{"location": a.location, "re": complex(a.weight).real,
                       "im": complex(a.weight).imag} for a in self.atoms],
            "meta": self.meta,
        }
        if self.errors is not None:
            d["std_error"] = np.asarray(self.errors, float).tolist()
        return _jsonable(d)

    def csv_rows(self):
        """Rows ``(x, re, im, abs, kind)``; atoms are flagged ``atom``."""
        rows = [(float(x), float(v.real), float(v.imag), float(abs(v)), "sample")
                for x, v in zip(self.x, self.values)]
        for a in self.atoms:
            w = complex(a.weight)
            rows.append((float(a.location), w.real, w.imag, abs(w), "atom"))
        return rows


@dataclass(frozen=True)
class CoherenceResult:
    """Coherence time [s] or bandwidth [Hz]; ``value`` may be ``inf``."""

    kind: str
    value: float
    threshold: float
    normalization: float | complex
    resolution: float
    eval_time: float | None = None
    bracket: tuple[float, float] | None = None

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def unit(self) -> str:
        return "s" if self.kind == "time" else "Hz"

    def summary(self) -> str:
        name = "T_coh" if self.kind == "time" else "B_coh"
        if self.is_infinite:
            return f"{name} = inf"
        mant = re.sub(r"e([+-])0*(\d)", r"e\1\2", f"{self.value:.2e}")
        return f"{name} = {mant} {self.unit}"

    def to_dict(self) -> dict:
        return _jsonable({
            "kind": self.kind, "value": self.value, "unit": self.unit,
            "threshold": self.threshold, "normalization": self.normalization,
            "resolution": self.resolution, "eval_time": self.eval_time,
            "bracket": list(self.bracket) if self.bracket else None,
        })
