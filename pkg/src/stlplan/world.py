"""Scenario model: labeled axis-aligned regions, start pose and kinematic limits.

Scenario files (``*.scn``) are YAML documents::

    name: chip
    v_max: 2.0
    omega_max: 3.0
    initial_state: {x: 1.0, y: 4.0, theta: 0.0}
    regions:
      - {label: D1, kind: door, x0: 5.0, y0: 5.0, x1: 5.3, y1: 7.0}
    key_bindings:
      - {door: D1, key: K1}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

KINDS = ("room", "obstacle", "wall", "key-pickup", "door", "goal", "charger")
BLOCKING_KINDS = ("obstacle", "wall")
CHARGED_CHANNEL = "charged"


class ScenarioError(ValueError):
    pass


def wrap_angle(theta: float) -> float:
    """Normalize to (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class Region:
    label: str
    kind: str
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def signed_distance(self, x, y):
        """Positive depth inside the box, negative Euclidean distance outside.

        Accepts scalars or arrays.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        depth = np.minimum(np.minimum(x - self.x0, self.x1 - x), np.minimum(y - self.y0, self.y1 - y))
        dx = np.maximum(np.maximum(self.x0 - x, x - self.x1), 0.0)
        dy = np.maximum(np.maximum(self.y0 - y, y - self.y1), 0.0)
        out = np.where(depth >= 0, depth, -np.hypot(dx, dy))
        return float(out) if out.ndim == 0 else out

    def contains(self, x, y) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def translated(self, dx: float, dy: float) -> "Region":
        return replace(self, x0=self.x0 + dx, y0=self.y0 + dy, x1=self.x1 + dx, y1=self.y1 + dy)


@dataclass(frozen=True)
class State:
    x: float
    y: float
    theta: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    regions: Mapping[str, Region]
    initial_state: State
    v_max: float
    omega_max: float
    key_bindings: Mapping[str, str] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        _validate(self)

    def labels(self, *kinds: str) -> list[str]:
        return [r.label for r in self.regions.values() if not kinds or r.kind in kinds]

    @property
    def channel_names(self) -> list[str]:
        names = self.labels("key-pickup")
        if self.labels("charger"):
            names.append(CHARGED_CHANNEL)
        return names

    def point_of(self, label: str) -> tuple[float, float]:
        try:
            return self.regions[label].center
        except KeyError:
            raise ScenarioError(f"unknown region {label!r} in scenario {self.name!r}") from None

    def with_changes(self, *, v_max_scale: float = 1.0, obstacle_offset=(0.0, 0.0)) -> "Scenario":
        """Copy with scaled speed limit and translated obstacles/walls."""
        dx, dy = obstacle_offset
        regions = {
            k: (r.translated(dx, dy) if r.kind in BLOCKING_KINDS else r) for k, r in self.regions.items()
        }
        return replace(self, regions=regions, v_max=self.v_max * v_max_scale)

    def describe(self) -> str:
        lines = [self.description.strip()] if self.description.strip() else []
        lines.append(
            f"The robot starts at ({_fmt(self.initial_state.x)}, {_fmt(self.initial_state.y)}) "
            f"heading {_fmt(self.initial_state.theta)} rad; maximum speed {_fmt(self.v_max)} m/s, "
            f"maximum turn rate {_fmt(self.omega_max)} rad/s."
        )
        lines.append("Regions (axis-aligned boxes, meters):")
        for r in self.regions.values():
            lines.append(
                f"- {r.label} ({r.kind}): x in [{_fmt(r.x0)}, {_fmt(r.x1)}], "
                f"y in [{_fmt(r.y0)}, {_fmt(r.y1)}], center ({_fmt(r.center[0])}, {_fmt(r.center[1])})"
            )
        for door, key in self.key_bindings.items():
            lines.append(f"- door {door} can only be entered while holding key {key}")
        return "\n".join(lines)


def _fmt(v: float) -> str:
    return f"{v:g}"


def _validate(s: Scenario) -> None:
    if not s.name:
        raise ScenarioError("name: must be a non-empty string")
    for label, r in s.regions.items():
        if label != r.label:
            raise ScenarioError(f"regions: key {label!r} does not match label {r.label!r}")
        if r.kind not in KINDS:
            raise ScenarioError(f"regions[{label}].kind: {r.kind!r} is not one of {', '.join(KINDS)}")
        if not all(math.isfinite(v) for v in (r.x0, r.y0, r.x1, r.y1)):
            raise ScenarioError(f"regions[{label}]: coordinates must be finite")
        if r.x1 <= r.x0 or r.y1 <= r.y0:
            raise ScenarioError(f"regions[{label}]: box must have positive area")
    if not (s.v_max > 0 and math.isfinite(s.v_max)):
        raise ScenarioError(f"v_max: must be positive, got {s.v_max}")
    if not (s.omega_max > 0 and math.isfinite(s.omega_max)):
        raise ScenarioError(f"omega_max: must be positive, got {s.omega_max}")
    st = s.initial_state
    if not all(math.isfinite(v) for v in (st.x, st.y, st.theta)):
        raise ScenarioError("initial_state: must be finite")
    for r in s.regions.values():
        if r.kind in BLOCKING_KINDS and r.signed_distance(st.x, st.y) >= 0:
            raise ScenarioError(f"initial_state: ({st.x}, {st.y}) lies inside {r.kind} {r.label!r}")
    for door, key in s.key_bindings.items():
        if door not in s.regions or s.regions[door].kind != "door":
            raise ScenarioError(f"key_bindings: {door!r} is not a door region")
        if key not in s.regions or s.regions[key].kind != "key-pickup":
            raise ScenarioError(f"key_bindings: {key!r} is not a key-pickup region")
    for door in s.labels("door"):
        if door not in s.key_bindings:
            raise ScenarioError(f"key_bindings: door {door!r} has no bound key")


def signed_distance(scenario: Scenario, label: str, point) -> float:
    try:
        region = scenario.regions[label]
    except KeyError:
        raise ScenarioError(f"unknown region {label!r} in scenario {scenario.name!r}") from None
    return float(region.signed_distance(point[0], point[1]))


def nearest_charger(scenario: Scenario, point) -> str:
    """Charger closest to ``point`` (zero distance when inside); ties go to the smaller label."""
    chargers = scenario.labels("charger")
    if not chargers:
        raise ScenarioError(f"scenario {scenario.name!r} defines no charger")
    return min(chargers, key=lambda c: (max(0.0, -signed_distance(scenario, c, point)), c))


# -- file format --------------------------------------------------------------


def _number(doc, key, where):
    v = doc.get(key) if isinstance(doc, dict) else None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}{key}: expected a number, got {v!r}")
    return float(v)


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    name = doc.get("name")
    if not isinstance(name, str):
        raise ScenarioError(f"name: expected a string, got {name!r}")
    raw_regions = doc.get("regions")
    if not isinstance(raw_regions, list) or not raw_regions:
        raise ScenarioError("regions: expected a non-empty list")
    regions = {}
    for i, item in enumerate(raw_regions):
        where = f"regions[{i}]."
        if not isinstance(item, dict):
            raise ScenarioError(f"regions[{i}]: expected a mapping")
        label, kind = item.get("label"), item.get("kind")
        if not isinstance(label, str) or not label:
            raise ScenarioError(f"{where}label: expected a non-empty string")
        if label in regions:
            raise ScenarioError(f"{where}label: duplicate label {label!r}")
        if not isinstance(kind, str):
            raise ScenarioError(f"{where}kind: expected a string")
        regions[label] = Region(label, kind, *(_number(item, k, where) for k in ("x0", "y0", "x1", "y1")))
    init = doc.get("initial_state")
    state = State(
        _number(init, "x", "initial_state."),
        _number(init, "y", "initial_state."),
        wrap_angle(_number(init, "theta", "initial_state.")) if isinstance(init, dict) and "theta" in init else 0.0,
    )
    bindings = {}
    for i, item in enumerate(doc.get("key_bindings") or []):
        if not (isinstance(item, dict) and isinstance(item.get("door"), str) and isinstance(item.get("key"), str)):
            raise ScenarioError(f"key_bindings[{i}]: expected {{door: str, key: str}}")
        bindings[item["door"]] = item["key"]
    return Scenario(
        name=name,
        regions=regions,
        initial_state=state,
        v_max=_number(doc, "v_max", ""),
        omega_max=_number(doc, "omega_max", ""),
        key_bindings=bindings,
        description=str(doc.get("description") or ""),
    )


def scenario_to_dict(s: Scenario) -> dict:
    doc = {"name": s.name}
    if s.description:
        doc["description"] = s.description
    doc.update(
        v_max=s.v_max,
        omega_max=s.omega_max,
        initial_state={"x": s.initial_state.x, "y": s.initial_state.y, "theta": s.initial_state.theta},
        regions=[
            {"label": r.label, "kind": r.kind, "x0": r.x0, "y0": r.y0, "x1": r.x1, "y1": r.y1}
            for r in s.regions.values()
        ],
        key_bindings=[{"door": d, "key": k} for d, k in s.key_bindings.items()],
    )
    return doc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid structured text: {exc}") from None
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(
        yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False, allow_unicode=True), encoding="utf-8"
    )


DATA_DIR = Path(__file__).parent / "data"
SCENARIO_DIR = DATA_DIR / "scenarios"


def builtin_scenario(name: str) -> Scenario:
    """One of the shipped fixtures: ``household``, ``chip`` or ``navigation``."""
    path = SCENARIO_DIR / f"{name}.scn"
    if not path.exists():
        raise ScenarioError(f"no shipped scenario named {name!r}")
    return load_scenario(path)
