"""Run configuration and body specifications read from JSON or short strings."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .body import BodySpec
from .errors import ConfigError
from .functions import TestFunction

SUITES = ("geometry", "measures", "spectral", "criteria", "bochner", "santalo")

DEFAULT_TOLERANCES = {
    "homogeneity": 1e-12,
    "euler": 1e-8,
    "legendre": 1e-8,
    "support_agreement": 1e-8,
    "map_reciprocity": 1e-10,
    "phih": 1e-8,
    "phih_regularized": 1e-6,
    "measure_mass": 1e-12,
    "measure_symmetry": 1e-10,
    "moment_ratio": 1e-10,
    "pushforward": 1e-8,
    "pushforward_regularized": 1e-6,
    "chvar": 1e-7,
    "chvar_regularized": 1e-4,
    "cordero_rotem": 1e-10,
    "duality": 1e-5,
    "unrestricted_constant": 1e-5,
    "eigen_residual": 1e-8,
    "adjointness": 1e-8,
    "metric_pushforward": 1e-6,
    "ball_constant": 1e-3,
    "transfer": 1e-12,
    "threshold": 1e-12,
    "qij_agreement": 1e-7,
    "qij_value": 1e-6,
    "quadrant_gap": 1e-8,
    "consistency": 1e-3,
    "bochner_euclidean": 1e-8,
    "bochner_hessian_dual": 1e-6,
    "bochner_centroaffine": 1e-8,
    "bs_equality": 1e-6,
    "bs_inequality": 1e-6,
    "bs_set": 1e-8,
}

TOP_LEVEL = {"schema_version", "body", "resolutions", "suites", "tolerances", "output",
             "threads", "seed", "samples"}
OUTPUT_KEYS = {"report", "csv_dir"}
BODY_KEYS = {"kind", "dim", "q", "semi_axes", "matrix", "alpha", "eps", "regularization_eps",
             "gauge"}


def _num(value, name):
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {value!r}") from exc


def _custom_gauge(text, dim):
    tf = TestFunction.parse(text, dim)
    return tf.value, (lambda x: tf.gradient(np.asarray(x))), (lambda x: tf.hessian(np.asarray(x)))


def body_spec_from_dict(d: dict) -> BodySpec:
    unknown = set(d) - BODY_KEYS
    if unknown:
        raise ConfigError(f"unknown body fields: {sorted(unknown)}")
    kind = d.get("kind")
    alpha = _num(d.get("alpha", 2.0), "alpha")
    eps = _num(d.get("regularization_eps", d.get("eps", 0.0)), "eps")
    try:
        if kind == "ball":
            return BodySpec.ball(int(d.get("dim", 2)), alpha=alpha)
        if kind == "ellipsoid":
            if "semi_axes" in d:
                return BodySpec.ellipsoid([_num(a, "semi_axes") for a in d["semi_axes"]], alpha=alpha)
            if "matrix" in d:
                m = np.asarray(d["matrix"], dtype=float)
                return BodySpec("ellipsoid", m.shape[0], matrix=m, alpha=alpha)
            raise ConfigError("ellipsoid needs semi_axes or matrix")
        if kind == "lq_ball":
            if "q" not in d:
                raise ConfigError("lq_ball needs q")
            return BodySpec.lq(_num(d["q"], "q"), int(d.get("dim", 2)), eps, alpha=alpha)
        if kind == "custom":
            if "gauge" not in d:
                raise ConfigError("custom body needs a gauge expression")
            dim = int(d.get("dim", 2))
            g, dg, hg = _custom_gauge(str(d["gauge"]), dim)
            return BodySpec.custom(dim, g, dg, hg, alpha=alpha)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown body kind {kind!r}")


def _short_value(text):
    if ";" in text:
        return [float(t) for t in text.split(";")]
    try:
        return float(text)
    except ValueError:
        return text


def parse_body_spec(text: str) -> BodySpec:
    """Body from a JSON string, a JSON file path, or ``kind:key=val,key=val``.

    In the short form lists use ';', e.g. ``ellipsoid:semi_axes=2;1``.
    """
    text = text.strip()
    if text.startswith("{"):
        try:
            return body_spec_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid body JSON: {exc}") from exc
    if os.path.isfile(text):
        return body_spec_from_dict(json.loads(Path(text).read_text(encoding="utf-8")))
    kind, _, rest = text.partition(":")
    d = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"body option {item!r} is not key=value")
        d[key.strip()] = val.strip() if key.strip() == "gauge" else _short_value(val.strip())
    if "dim" in d:
        d["dim"] = int(d["dim"])
    if isinstance(d.get("semi_axes"), float):
        d["semi_axes"] = [d["semi_axes"]]
    return body_spec_from_dict(d)


@dataclass
class RunConfig:
    body: BodySpec
    body_dict: dict
    resolutions: list
    suites: list
    tolerances: dict
    report_path: Optional[str] = None
    csv_dir: Optional[str] = None
    threads: int = 1
    seed: int = 0
    samples: int = 100
    raw: dict = field(default_factory=dict)

    def tol(self, name):
        return self.tolerances[name]


def load_config(source) -> RunConfig:
    """Validate a config given as a dict, a JSON string or a path."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        try:
            if os.path.isfile(text):
                text = Path(text).read_text(encoding="utf-8")
            data = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if data.get("schema_version") != 1:
        raise ConfigError("schema_version must be 1")
    if "body" not in data:
        raise ConfigError("config needs a body")
    body_dict = data["body"]
    spec = parse_body_spec(body_dict) if isinstance(body_dict, str) else body_spec_from_dict(body_dict)

    suites = data.get("suites", list(SUITES))
    if not isinstance(suites, list) or not suites:
        raise ConfigError("suites must be a nonempty list")
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites: {bad}")
    suites = [s for s in SUITES if s in suites]  # dependency order

    res = data.get("resolutions", [256] if spec.dim == 2 else [20])
    if isinstance(res, int):
        res = [res]
    if not isinstance(res, list) or not res or not all(isinstance(r, int) for r in res):
        raise ConfigError("resolutions must be a list of integers")
    for r in res:
        if r < 16 or (spec.dim == 2 and (r > 8192 or r % 4)) or (spec.dim == 3 and r > 64):
            raise ConfigError(f"resolution {r} outside the supported range")

    tol = dict(DEFAULT_TOLERANCES)
    for k, v in data.get("tolerances", {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}")
        v = _num(v, k)
        if not v > 0:
            raise ConfigError(f"tolerance {k!r} must be positive")
        tol[k] = v

    out = data.get("output", {})
    if not isinstance(out, dict) or set(out) - OUTPUT_KEYS:
        raise ConfigError(f"output accepts only {sorted(OUTPUT_KEYS)}")
    threads = data.get("threads", 1)
    env = os.environ.get("BM_SPECTRA_THREADS")
    if env:
        threads = env
    try:
        threads = int(threads)
    except ValueError as exc:
        raise ConfigError("thread count must be an integer") from exc
    if threads < 1:
        raise ConfigError("thread count must be positive")
    seed = data.get("seed", 0)
    samples = data.get("samples", 100)
    if not isinstance(seed, int) or not isinstance(samples, int) or samples < 1:
        raise ConfigError("seed and samples must be integers (samples >= 1)")
    return RunConfig(spec, body_dict, res, suites, tol, out.get("report"), out.get("csv_dir"),
                     threads, seed, samples, data)
