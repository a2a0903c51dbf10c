"""Analysis configuration: JSON input validated against a schema.

Numbers may be given as JSON numbers or as strings holding a decimal or an
exact ratio such as ``"1/3"``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .distributions import HeavyComponent, MixtureService, RationalLST
from .exceptions import ConfigInvalid
from .inversion import InversionSettings
from .map_model import MapModel

_NUM = {"oneOf": [{"type": "number"},
                  {"type": "string", "pattern": r"^\s*-?\d+(\.\d*)?([eE][-+]?\d+)?\s*(/\s*\d+\s*)?$"}]}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "corrected-ph analysis configuration",
    "type": "object",
    "required": ["map", "service", "grid"],
    "additionalProperties": False,
    "properties": {
        "map": {
            "type": "object",
            "required": ["rates", "trans", "real_prob"],
            "additionalProperties": False,
            "properties": {"rates": _VEC, "trans": _MAT, "real_prob": _VEC},
        },
        "service": {
            "type": "object",
            "required": ["ph", "heavy", "eps"],
            "additionalProperties": False,
            "properties": {
                "ph": {
                    "type": "object",
                    "required": ["kind", "params"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["exp", "erlang", "hyperexp", "rational"]},
                        "params": {"type": "object"},
                    },
                },
                "heavy": {
                    "type": "object",
                    "required": ["kind", "params"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["pareto", "aw_sqrt", "table"]},
                        "params": {"type": "object"},
                    },
                },
                "eps": _NUM,
            },
        },
        "grid": {
            "oneOf": [
                {"type": "object", "required": ["t_values"], "additionalProperties": False,
                 "properties": {"t_values": _VEC}},
                {"type": "object", "required": ["start", "stop", "count"], "additionalProperties": False,
                 "properties": {"start": _NUM, "stop": _NUM,
                                "count": {"type": "integer", "minimum": 1},
                                "spacing": {"enum": ["linear", "log"]}}},
            ]
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "algorithm": {"enum": ["euler", "talbot"]},
                "terms": {"type": ["integer", "null"], "minimum": 10},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": ["string", "null"]}, "format": {"enum": ["csv"]}},
        },
    },
}


def to_float(x) -> float:
    """JSON number or decimal/ratio string to float."""
    if isinstance(x, str):
        try:
            return float(Fraction(x.replace(" ", "")))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigInvalid(f"cannot read number {x!r}") from exc
    return float(x)


def _floats(v):
    if isinstance(v, list):
        return [_floats(e) for e in v]
    return to_float(v)


def _param(params: dict, key: str, kind: str):
    if key not in params:
        raise ConfigInvalid(f"{kind} needs parameter {key!r}")
    return _floats(params[key])


def build_ph(spec: dict) -> RationalLST:
    kind, p = spec["kind"], spec["params"]
    if kind == "exp":
        return RationalLST.exponential(_param(p, "rate", kind))
    if kind == "erlang":
        return RationalLST.erlang(int(_param(p, "k", kind)), _param(p, "rate", kind))
    if kind == "hyperexp":
        return RationalLST.hyperexp(_param(p, "probs", kind), _param(p, "rates", kind))
    return RationalLST.from_coeffs(_param(p, "num", kind), _param(p, "den", kind))


def build_heavy(spec: dict, t_max: float) -> HeavyComponent:
    kind, p = spec["kind"], spec["params"]
    if kind == "pareto":
        return HeavyComponent.pareto(_param(p, "shape", kind), _param(p, "scale", kind))
    if kind == "aw_sqrt":
        tm = to_float(p.get("t_max", max(100.0, t_max)))
        return HeavyComponent.aw_sqrt(_param(p, "kappa", kind), t_max=tm)
    return HeavyComponent.table(_param(p, "x", kind), _param(p, "tail", kind))


def build_grid(spec: dict) -> np.ndarray:
    if "t_values" in spec:
        grid = np.array(_floats(spec["t_values"]))
    else:
        start, stop, count = to_float(spec["start"]), to_float(spec["stop"]), spec["count"]
        if spec.get("spacing", "linear") == "log":
            if start <= 0:
                raise ConfigInvalid("log-spaced grid needs start > 0")
            grid = np.geomspace(start, stop, count)
        else:
            grid = np.linspace(start, stop, count)
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ConfigInvalid("grid must be nonempty, nonnegative and increasing")
    return grid


@dataclass(frozen=True)
class AnalysisConfig:
    model: MapModel
    mixture: MixtureService
    grid: np.ndarray
    oracle_enabled: bool
    inversion: InversionSettings
    output_path: str | None
    output_format: str
    raw: dict

    def with_overrides(self, **kw) -> "AnalysisConfig":
        fields = dict(self.__dict__)
        fields.update({k: v for k, v in kw.items() if v is not None})
        return AnalysisConfig(**fields)


def parse_config(doc: dict) -> AnalysisConfig:
    """Validate a configuration document and build the model objects.

    Raises:
        ConfigInvalid: on schema violations or inconsistent parameters.
    """
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"config invalid at {where}: {exc.message}") from exc
    mp = doc["map"]
    try:
        model = MapModel(_floats(mp["rates"]), _floats(mp["trans"]), _floats(mp["real_prob"]))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(str(exc)) from exc
    grid = build_grid(doc["grid"])
    sv = doc["service"]
    mixture = MixtureService(to_float(sv["eps"]), build_ph(sv["ph"]), build_heavy(sv["heavy"], float(grid[-1])))
    oracle = doc.get("oracle", {})
    out = doc.get("output", {})
    return AnalysisConfig(
        model=model,
        mixture=mixture,
        grid=grid,
        oracle_enabled=bool(oracle.get("enabled", True)),
        inversion=InversionSettings(oracle.get("algorithm", "euler"), oracle.get("terms")),
        output_path=out.get("path"),
        output_format=out.get("format", "csv"),
        raw=doc,
    )


def load_config(path) -> AnalysisConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (``table1.json``, ``mg1.json``)."""
    return Path(__file__).parent / "data" / name
