"""Checks, reports and their lossless JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

SCHEMA_VERSION = 1
RELATIONS = ("<=", ">=")


@dataclass
class Check:
    suite: str
    name: str
    value: float
    threshold: float
    relation: str = "<="
    inputs: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")
        self.value = float(self.value)
        self.threshold = float(self.threshold)

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.relation == "<=":
            return self.value <= self.threshold
        return self.value >= self.threshold

    def as_dict(self):
        return {"suite": self.suite, "name": self.name, "value": self.value,
                "relation": self.relation, "threshold": self.threshold,
                "passed": self.passed, "inputs": self.inputs, "provenance": self.provenance}


@dataclass
class Report:
    config: dict
    environment: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    def add(self, check: Check):
        self.checks.append(check)
        return check

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {"schema_version": SCHEMA_VERSION, "config": self.config,
                "environment": self.environment,
                "summary": {"checks": len(self.checks),
                            "failed": sum(not c.passed for c in self.checks),
                            "errors": len(self.errors)},
                "checks": [c.as_dict() for c in self.checks],
                "derived": self.derived, "notes": self.notes, "errors": self.errors}

    def to_json(self) -> str:
        return dumps(self.as_dict())


# ---------------------------------------------------------------- JSON

def _plain(obj: Any):
    """Convert numpy scalars/arrays and tuples into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    # keep floats recognizable as floats after a round trip
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj, ensure_ascii=False)


def dumps(obj, indent=2) -> str:
    """JSON text with every float written to 17 significant digits and NaN/inf as null."""
    return _encode(_plain(obj), indent, 0) + "\n"


def loads(text: str):
    return json.loads(text)


# ---------------------------------------------------------------- CSV

def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, float) else v for v in _plain(list(row))])
    return buf.getvalue()


def write_csv(path, header, rows: Optional[list]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
