"""Time-indexed record of one driving trial at 50 Hz.

Every row holds the tick-start vehicle and device state, the five boundary
ray distances, the active guidance method, and the torques the tick's
sub-steps applied. The CSV form is byte-reproducible: floats are written
with repr (shortest round-trip form), so identical runs serialize to
identical bytes, and parsing recovers the exact values.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import TICK_DT

FLOAT_COLUMNS = (
    "t", "x", "y", "heading", "v", "yaw_rate", "rpm",
    "theta_s", "theta_s_dot", "theta_a", "theta_a_dot", "theta_b", "theta_b_dot",
    "d1", "d2", "d3", "d4", "d5",
    "tq_assist_s", "tq_assist_a",
    "tq_feedback_s", "tq_feedback_a", "tq_feedback_b",
    "tq_driver_s", "tq_driver_a", "tq_driver_b",
)
COLUMNS = FLOAT_COLUMNS[:18] + ("method",) + FLOAT_COLUMNS[18:]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Log does not satisfy the run-log schema."""


@dataclass
class RunLog:
    """Columnar trial record; arrays share one length."""

    data: dict[str, np.ndarray]
    method: list[str]
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.method)

    def __getattr__(self, name: str):
        data = object.__getattribute__(self, "data")
        if name in data:
            return data[name]
        raise AttributeError(name)

    @property
    def rays(self) -> np.ndarray:
        """Boundary ray distances, shape (n, 5), left to right."""
        return np.column_stack([self.data[f"d{i}"] for i in range(1, 6)])

    def validate(self) -> None:
        """Schema gate run before any metric or training consumption."""
        n = len(self.method)
        for col in FLOAT_COLUMNS:
            if col not in self.data:
                raise SchemaError(f"missing column {col}")
            arr = self.data[col]
            if len(arr) != n:
                raise SchemaError(f"column {col} has length {len(arr)} != {n}")
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"column {col} has non-finite values")
        t = self.data["t"]
        if n and abs(t[0]) > 1e-12:
            raise SchemaError("time must start at 0")
        if n > 1:
            dt = np.diff(t)
            if np.any(np.abs(dt - TICK_DT) > 1e-9):
                raise SchemaError("time must advance uniformly by the tick period")
        for m in self.method:
            if m not in ("N", "G", "C"):
                raise SchemaError(f"unknown method tag {m!r}")


class RunLogBuilder:
    """Row-at-a-time accumulator used by the session loop."""

    def __init__(self, manifest: dict | None = None):
        self._rows: dict[str, list[float]] = {c: [] for c in FLOAT_COLUMNS}
        self._method: list[str] = []
        self.manifest = manifest or {}

    def append(self, method: str, **values: float) -> None:
        for col in FLOAT_COLUMNS:
            self._rows[col].append(float(values[col]))
        self._method.append(method)

    def build(self) -> RunLog:
        data = {c: np.asarray(v, dtype=float) for c, v in self._rows.items()}
        return RunLog(data=data, method=self._method, manifest=dict(self.manifest))


def dump_csv(log: RunLog) -> str:
    lines = [",".join(COLUMNS)]
    cols = [log.data[c] if c != "method" else log.method for c in COLUMNS]
    for i in range(len(log)):
        parts = []
        for c, col in zip(COLUMNS, cols):
            parts.append(col[i] if c == "method" else repr(float(col[i])))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> RunLog:
    lines = text.splitlines()
    header = tuple(lines[0].split(","))
    if header != COLUMNS:
        raise SchemaError(f"unexpected CSV header {header!r}")
    data: dict[str, list[float]] = {c: [] for c in FLOAT_COLUMNS}
    method: list[str] = []
    for ln in lines[1:]:
        if not ln:
            continue
        parts = ln.split(",")
        for c, raw in zip(COLUMNS, parts):
            if c == "method":
                method.append(raw)
            else:
                data[c].append(float(raw))
    return RunLog(data={c: np.asarray(v, dtype=float) for c, v in data.items()},
                  method=method)


def save_log(log: RunLog, filename, with_manifest: bool = True) -> str:
    """Write the CSV (plus a JSON manifest sidecar) and return its sha256."""
    text = dump_csv(log)
    with open(filename, "w") as fh:
        fh.write(text)
    digest = hashlib.sha256(text.encode()).hexdigest()
    if with_manifest:
        manifest = dict(log.manifest)
        manifest.setdefault("schema_version", SCHEMA_VERSION)
        manifest["csv_sha256"] = digest
        with open(str(filename) + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return digest


def load_log(filename) -> RunLog:
    with open(filename) as fh:
        log = parse_csv(fh.read())
    try:
        with open(str(filename) + ".json") as fh:
            log.manifest = json.load(fh)
    except FileNotFoundError:
        pass
    log.validate()
    return log
