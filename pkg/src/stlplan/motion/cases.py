"""Case library used to functionally validate generated controllers.

A library is a directory with one subdirectory per case holding
``case.yaml`` (scenario reference, sweep overrides, formula, timed
waypoints) and ``reference.traj`` (the certifying trajectory).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from ..signal import (
    TimedTrajectory,
    TimedWaypoints,
    derive_channels,
    format_trajectory,
    load_trajectory,
)
from ..stl import EmptyWindowError, Formula, parse_stl, print_stl, robustness, scale_time
from ..world import Scenario, ScenarioError, builtin_scenario
from .controller import builtin_controller
from .simulate import DEFAULT_DT, simulate

DEFAULT_LIBRARY = Path(__file__).resolve().parent.parent / "data" / "cases"
SEED_FILE = DEFAULT_LIBRARY.parent / "case_seeds.yaml"

DEADLINE_SCALES = (0.8, 1.0, 1.5)
V_MAX_SCALES = (0.5, 1.0)


@dataclass(frozen=True)
class Case:
    id: str
    scenario_ref: str
    formula: Formula
    waypoints: TimedWaypoints
    v_max_scale: float = 1.0
    obstacle_offset: tuple = (0.0, 0.0)
    reference: Optional[TimedTrajectory] = field(default=None, compare=False, repr=False)
    scenario: Scenario = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacle_offset", tuple(float(v) for v in self.obstacle_offset))
        base = builtin_scenario(self.scenario_ref)
        object.__setattr__(
            self, "scenario", base.with_changes(v_max_scale=self.v_max_scale, obstacle_offset=self.obstacle_offset)
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scenario": self.scenario_ref,
            "v_max_scale": self.v_max_scale,
            "obstacle_offset": list(self.obstacle_offset),
            "formula": print_stl(self.formula),
            "waypoints": [
                [g if isinstance(g, str) else list(g), t] for g, t in zip(self.waypoints.targets, self.waypoints.times)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict, reference=None) -> "Case":
        targets = [g if isinstance(g, str) else tuple(g) for g, _ in doc["waypoints"]]
        times = [float(t) for _, t in doc["waypoints"]]
        return cls(
            id=doc["id"],
            scenario_ref=doc["scenario"],
            formula=parse_stl(doc["formula"]),
            waypoints=TimedWaypoints(targets, times),
            v_max_scale=float(doc.get("v_max_scale", 1.0)),
            obstacle_offset=tuple(doc.get("obstacle_offset", (0.0, 0.0))),
            reference=reference,
        )


@dataclass(frozen=True)
class CaseLibrary:
    cases: tuple

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple(self.cases))

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def ids(self) -> list[str]:
        return [c.id for c in self.cases]


def evaluate_case(case: Case, traj: TimedTrajectory) -> float:
    return robustness(case.formula, derive_channels(traj, case.scenario), case.scenario)


def min_travel_time(case: Case) -> float:
    s0 = case.scenario.initial_state
    pts = [(s0.x, s0.y), *case.waypoints.points(case.scenario)]
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:])) / case.scenario.v_max


def certify(case: Case, dt: float = DEFAULT_DT) -> Optional[Case]:
    """Return ``case`` with a reference trajectory of robustness >= 0, or None.

    Cases that fail the necessary travel-time condition are rejected
    without simulating.
    """
    if min_travel_time(case) > case.waypoints.times[-1]:
        return None
    sc = case.scenario
    traj = simulate(builtin_controller(sc.v_max, sc.omega_max), case.waypoints, sc, dt)
    try:
        rho = evaluate_case(case, traj)
    except EmptyWindowError:
        return None
    if rho < 0:
        return None
    return replace(case, reference=traj)


def generate_cases(
    base: Case,
    deadline_scales=DEADLINE_SCALES,
    obstacle_offsets=((0.0, 0.0),),
    v_max_scales=V_MAX_SCALES,
    dt: float = DEFAULT_DT,
) -> CaseLibrary:
    """Sweep deadline, obstacle placement and speed limit around ``base``.

    Deadlines scale the formula's intervals and the waypoint timestamps
    together.  Variants that cannot be re-certified are dropped; the
    identity variant keeps the base id.
    """
    cases = []
    for d, off, vs in itertools.product(deadline_scales, obstacle_offsets, v_max_scales):
        off = (float(off[0]), float(off[1]))
        identity = d == 1.0 and vs == 1.0 and off == (0.0, 0.0)
        case_id = base.id if identity else f"{base.id}_d{d:g}_v{vs:g}_o{off[0]:g}_{off[1]:g}"
        try:
            variant = Case(
                id=case_id,
                scenario_ref=base.scenario_ref,
                formula=scale_time(base.formula, d),
                waypoints=base.waypoints.scaled(d),
                v_max_scale=base.v_max_scale * vs,
                obstacle_offset=(base.obstacle_offset[0] + off[0], base.obstacle_offset[1] + off[1]),
            )
        except ScenarioError:
            continue
        certified = certify(variant, dt)
        if certified is not None:
            cases.append(certified)
    if not cases:
        raise ValueError(f"sweep around {base.id!r} produced no certified case")
    return CaseLibrary(cases)


def build_library(seed_file=SEED_FILE, dt: float = DEFAULT_DT) -> CaseLibrary:
    """Certify the sweep around every base case listed in ``seed_file``.

    A seed may add ``obstacle_offsets``; deadline and speed scales always
    use the default sweep.
    """
    seeds = yaml.safe_load(Path(seed_file).read_text(encoding="utf-8"))
    cases = []
    for doc in seeds:
        base = Case.from_dict(doc)
        if certify(base, dt) is None:
            raise ValueError(f"base case {base.id!r} is not certified")
        offsets = [tuple(o) for o in doc.get("obstacle_offsets", [(0.0, 0.0)])]
        cases.extend(generate_cases(base, obstacle_offsets=offsets, dt=dt))
    return CaseLibrary(cases)


def load_library(directory=DEFAULT_LIBRARY) -> CaseLibrary:
    directory = Path(directory)
    cases = []
    for case_dir in sorted(p for p in directory.iterdir() if (p / "case.yaml").exists()):
        doc = yaml.safe_load((case_dir / "case.yaml").read_text(encoding="utf-8"))
        ref_path = case_dir / "reference.traj"
        reference = load_trajectory(ref_path) if ref_path.exists() else None
        cases.append(Case.from_dict(doc, reference))
    if not cases:
        raise ValueError(f"no cases found in {directory}")
    return CaseLibrary(cases)


def save_library(library: CaseLibrary, directory) -> None:
    directory = Path(directory)
    for case in library:
        case_dir = directory / case.id
        case_dir.mkdir(parents=True, exist_ok=True)
        (case_dir / "case.yaml").write_text(yaml.safe_dump(case.to_dict(), sort_keys=False), encoding="utf-8")
        if case.reference is not None:
            (case_dir / "reference.traj").write_text(format_trajectory(case.reference), encoding="utf-8")
