"""JSON experiment configuration: schema, loading and conversion to model objects."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .floquet import KickedSystem
from .flow import DEFAULT_MIN_STEP, DEFAULT_OVERLAP_THRESHOLD, DEFAULT_POINTS, FlowGrid
from .transport import TransportPlan

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_COMPLEX_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}

SCHEMA = {
    "type": "object",
    "properties": {
        "system": {
            "type": "object",
            "properties": {
                "h0_diag": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "h0": {"type": "array", "items": _COMPLEX_VECTOR, "minItems": 1},
                "v": _COMPLEX_VECTOR,
                "period_T": {"type": "number", "exclusiveMinimum": 0},
                "normalize_v": {"type": "boolean"},
                "branch_origin": {"type": ["number", "null"]},
            },
            "required": ["v"],
            "oneOf": [{"required": ["h0_diag"]}, {"required": ["h0"]}],
            "additionalProperties": False,
        },
        "flow": {
            "type": "object",
            "properties": {
                "points": {"type": "integer", "minimum": 2},
                "adaptive": {"type": "boolean"},
                "min_step": {"type": "number", "exclusiveMinimum": 0},
                "overlap_threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "additionalProperties": False,
        },
        "transport": {
            "type": "object",
            "properties": {
                "steps": {"type": "integer", "minimum": 0},
                "schedule": {"enum": ["linear", "smoothstep"]},
                "cycles": {"type": "integer", "minimum": 1},
                "initial_branch": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "aqc": {
            "type": "object",
            "properties": {
                "cnf": {"type": "string"},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "t_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "period_T": {"type": ["number", "null"]},
                "v_strategy": {"enum": ["oracle", "uniform", "custom"]},
                "custom_v": _COMPLEX_VECTOR,
                "steps": {"type": "integer", "minimum": 0},
                "gap_grid_points": {"type": "integer", "minimum": 2},
                "candidates": {"type": "array", "items": {"enum": ["oracle", "uniform"]}},
            },
            "required": ["cnf"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "flow_csv": {"type": "string"},
                "transport_csv": {"type": "string"},
                "aqc_json": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    pass


def complex_array(items) -> np.ndarray:
    out = []
    for z in items:
        out.append(complex(z[0], z[1]) if isinstance(z, list) else complex(z))
    return np.array(out, dtype=np.complex128)


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw, path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> ExperimentConfig:
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
        return cls(raw, Path(base_dir))

    def section(self, name: str, required: bool = True) -> dict:
        if name not in self.raw:
            if required:
                raise ConfigError(f"config has no '{name}' section")
            return {}
        return self.raw[name]

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def system(self) -> KickedSystem:
        s = self.section("system")
        v = complex_array(s["v"])
        if s.get("normalize_v", False):
            v = v / np.linalg.norm(v)
        period = float(s.get("period_T", 1.0))
        try:
            if "h0_diag" in s:
                return KickedSystem.from_diagonal(s["h0_diag"], v, period)
            return KickedSystem(np.array([complex_array(row) for row in s["h0"]]), v, period)
        except ValueError as exc:
            raise ConfigError(f"invalid system: {exc}") from exc

    def branch_origin(self) -> float | None:
        value = self.section("system").get("branch_origin")
        return None if value is None else float(value)

    def flow_grid(self) -> FlowGrid:
        f = self.section("flow", required=False)
        return FlowGrid.uniform(
            int(f.get("points", DEFAULT_POINTS)),
            adaptive=bool(f.get("adaptive", True)),
            min_step=float(f.get("min_step", DEFAULT_MIN_STEP)),
            overlap_threshold=float(f.get("overlap_threshold", DEFAULT_OVERLAP_THRESHOLD)),
        )

    def transport_plan(self, steps: int | None = None) -> TransportPlan:
        t = self.section("transport", required=False)
        return TransportPlan(
            steps_M=int(t.get("steps", 4096) if steps is None else steps),
            schedule=t.get("schedule", "linear"),
            initial_branch=int(t.get("initial_branch", 0)),
            cycles=int(t.get("cycles", 1)),
        )

    def cnf_path(self) -> Path:
        p = Path(self.section("aqc")["cnf"])
        return p if p.is_absolute() else self.base_dir / p

    def output(self, key: str) -> str | None:
        return self.section("output", required=False).get(key)
