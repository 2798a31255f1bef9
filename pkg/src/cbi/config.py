"""JSON problem configuration.

Schema::

    {"partition": {"breakpoints": [...], "masses": [...] | "uniform-consistent",
                   "fault_free": false},
     "observation": {"r": 1, "k": 52319},
     "target": {"m": 46, "alpha": 0.009895},
     "objective": {"kind": "standard" | "capped", "l": 0},
     "solver": {"tol": 1e-13, "max_iter": 200}}

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .model import (
    IntervalPartition,
    Observation,
    ReliabilityTarget,
    uniform_consistent_partition,
    validate_partition,
)
from .oracle import ObjectiveKind, ObjectiveTag
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL

UNIFORM = "uniform-consistent"
_SECTIONS = {
    "partition": {"breakpoints", "masses", "fault_free"},
    "observation": {"r", "k"},
    "target": {"m", "alpha"},
    "objective": {"kind", "l"},
    "solver": {"tol", "max_iter"},
}
_REQUIRED = {"partition": {"breakpoints"}, "observation": set(), "target": {"m"}}


@dataclass(frozen=True)
class ProblemConfig:
    partition: IntervalPartition
    observation: Observation
    target: ReliabilityTarget
    objective: ObjectiveKind
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def to_dict(self) -> dict[str, Any]:
        """Plain-JSON form that :func:`parse_config` accepts back."""
        part = self.partition
        # fault-free partitions list only the continuous part
        breakpoints = list(part.breakpoints[1:] if part.fault_free else part.breakpoints)
        obj: dict[str, Any] = {"kind": self.objective.tag.value}
        if self.objective.l is not None:
            obj["l"] = self.objective.l
        target: dict[str, Any] = {"m": self.target.m}
        if self.target.alpha is not None:
            target["alpha"] = self.target.alpha
        return {
            "partition": {"breakpoints": breakpoints, "masses": list(part.masses), "fault_free": part.fault_free},
            "observation": {"r": self.observation.r, "k": self.observation.k},
            "target": target,
            "objective": obj,
            "solver": {"tol": self.tol, "max_iter": self.max_iter},
        }


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"'{name}' must be an object")
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ConfigError(f"unknown field(s) in '{name}': {sorted(unknown)}")
    missing = _REQUIRED.get(name, set()) - set(sec)
    if missing:
        raise ConfigError(f"missing field(s) in '{name}': {sorted(missing)}")
    return sec


def _number(sec: dict, key: str, default: Any = None) -> Any:
    v = sec.get(key, default)
    if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise ConfigError(f"'{key}' must be a number, got {v!r}")
    return v


def parse_config(raw: Any) -> ProblemConfig:
    """Validate a decoded JSON document."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    for name in _REQUIRED:
        if name not in raw and _REQUIRED[name]:
            raise ConfigError(f"missing section '{name}'")

    psec = _section(raw, "partition")
    fault_free = psec.get("fault_free", False)
    if not isinstance(fault_free, bool):
        raise ConfigError("'fault_free' must be true or false")
    masses = psec.get("masses", UNIFORM)
    if masses == UNIFORM:
        if fault_free:
            raise ConfigError("uniform-consistent masses cannot carry a point mass at 0")
        partition = uniform_consistent_partition(psec["breakpoints"])
    elif isinstance(masses, list):
        partition = validate_partition(psec["breakpoints"], masses, fault_free)
    else:
        raise ConfigError(f"'masses' must be a list or {UNIFORM!r}")

    osec = _section(raw, "observation")
    observation = Observation(_number(osec, "r", 0), _number(osec, "k", 0))
    tsec = _section(raw, "target")
    target = ReliabilityTarget(_number(tsec, "m"), _number(tsec, "alpha"))

    osec = _section(raw, "objective")
    kind = osec.get("kind", "standard")
    if kind == "standard":
        if "l" in osec:
            raise ConfigError("'l' only applies to the capped objective")
        objective = ObjectiveKind()
    elif kind == "capped":
        l = _number(osec, "l")
        if l is None:
            raise ConfigError("the capped objective needs 'l'")
        if l >= target.m:
            raise ConfigError(f"l = {l} must be below m = {target.m}")
        objective = ObjectiveKind(ObjectiveTag.CAPPED, l)
    else:
        raise ConfigError(f"unknown objective kind {kind!r}")

    ssec = _section(raw, "solver")
    tol = _number(ssec, "tol", DEFAULT_TOL)
    max_iter = _number(ssec, "max_iter", DEFAULT_MAX_ITER)
    if not tol > 0 or int(max_iter) != max_iter or max_iter < 1:
        raise ConfigError("solver needs tol > 0 and an integer max_iter >= 1")
    return ProblemConfig(partition, observation, target, objective, float(tol), int(max_iter))


def load_config(path: str | Path) -> ProblemConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(raw)
