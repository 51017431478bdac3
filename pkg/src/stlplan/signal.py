"""Timed trajectories, planner artifacts, and derived boolean channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .world import CHARGED_CHANNEL, Scenario, ScenarioError

TIME_EPS = 1e-9
CHARGE_SECONDS = 3.0

Target = Union[str, tuple]  # region label or (x, y) point


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimedTrajectory:
    """Samples ``(x, y, t)`` plus boolean channels aligned with the samples."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    channels: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t))
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "channels", {k: _frozen(v, bool) for k, v in self.channels.items()})
        n = len(self.t)
        if n == 0:
            raise ValueError("trajectory needs at least one sample")
        if len(self.x) != n or len(self.y) != n:
            raise ValueError("t, x, y must have equal length")
        if any(len(v) != n for v in self.channels.values()):
            raise ValueError("every channel needs one value per sample")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("trajectory samples must be finite")

    @classmethod
    def from_samples(cls, samples: Sequence[tuple], channels=None) -> "TimedTrajectory":
        arr = np.asarray(samples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 2], arr[:, 0], arr[:, 1], channels or {})

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimedTrajectory):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and self.channels.keys() == other.channels.keys()
            and all(np.array_equal(v, other.channels[k]) for k, v in self.channels.items())
        )

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def with_channels(self, channels: Mapping[str, np.ndarray]) -> "TimedTrajectory":
        merged = dict(self.channels)
        merged.update(channels)
        return TimedTrajectory(self.t, self.x, self.y, merged)


@dataclass(frozen=True)
class SubgoalSequence:
    """Untimed ordered targets produced by the task planner."""

    targets: tuple
    raw: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ValueError("subgoal sequence must be non-empty")

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    def points(self, scenario: Scenario) -> list[tuple[float, float]]:
        return [resolve_target(scenario, g) for g in self.targets]


@dataclass(frozen=True)
class TimedWaypoints:
    """Targets annotated with strictly increasing timestamps.

    A target repeated on consecutive entries is a dwell: the robot stays
    there until the later timestamp.
    """

    targets: tuple
    times: tuple
    raw: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.targets:
            raise ValueError("timed waypoints must be non-empty")
        if len(self.targets) != len(self.times):
            raise ValueError("one timestamp per target")
        if not all(math.isfinite(t) for t in self.times):
            raise ValueError("timestamps must be finite")
        if self.times[0] < 0:
            raise ValueError("first timestamp must be >= 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.targets)

    def points(self, scenario: Scenario) -> list[tuple[float, float]]:
        return [resolve_target(scenario, g) for g in self.targets]

    def collapsed_targets(self) -> tuple:
        """Targets with consecutive repeats (dwells) merged."""
        out = []
        for g in self.targets:
            if not out or out[-1] != g:
                out.append(g)
        return tuple(out)

    def scaled(self, factor: float) -> "TimedWaypoints":
        return TimedWaypoints(self.targets, tuple(t * factor for t in self.times))


def resolve_target(scenario: Scenario, target) -> tuple[float, float]:
    if isinstance(target, str):
        return scenario.point_of(target)
    x, y = target
    return (float(x), float(y))


def format_target(target) -> str:
    if isinstance(target, str):
        return target
    return f"({target[0]:g}, {target[1]:g})"


def resample(traj: TimedTrajectory, dt: float) -> TimedTrajectory:
    """Piecewise-linear resampling on ``t1, t1+dt, ..., tn`` (endpoint kept).

    Grid points within 1e-9 s of an existing sample reuse that sample
    exactly; boolean channels are zero-order held.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if len(traj) < 2:
        raise ValueError("resampling needs at least two samples")
    t0, tn = traj.t[0], traj.t[-1]
    steps = int(math.floor((tn - t0) / dt + TIME_EPS))
    grid = t0 + dt * np.arange(steps + 1)
    if tn - grid[-1] > TIME_EPS:
        grid = np.append(grid, tn)
    else:
        grid[-1] = tn
    # snap onto original timestamps where they coincide
    idx = np.clip(np.searchsorted(traj.t, grid), 0, len(traj) - 1)
    for cand in (idx, np.maximum(idx - 1, 0)):
        close = np.abs(traj.t[cand] - grid) <= TIME_EPS
        grid[close] = traj.t[cand[close]]
    x = np.interp(grid, traj.t, traj.x)
    y = np.interp(grid, traj.t, traj.y)
    hold = np.searchsorted(traj.t, grid + TIME_EPS, side="right") - 1
    channels = {k: v[hold] for k, v in traj.channels.items()}
    return TimedTrajectory(grid, x, y, channels)


def derive_channels(traj: TimedTrajectory, scenario: Scenario) -> TimedTrajectory:
    """Add key-possession channels (one per key label) and ``charged``.

    ``holds(K)`` becomes true at the first sample inside key region K and
    stays true.  ``charged`` becomes true once the samples have stayed inside
    one charger for at least 3 s, and stays true.
    """
    channels = {}
    for key in scenario.labels("key-pickup"):
        inside = scenario.regions[key].signed_distance(traj.x, traj.y) >= 0
        channels[key] = np.logical_or.accumulate(inside)
    chargers = scenario.labels("charger")
    if chargers:
        charged = np.zeros(len(traj), dtype=bool)
        for c in chargers:
            inside = scenario.regions[c].signed_distance(traj.x, traj.y) >= 0
            run_start = None
            for i, flag in enumerate(inside):
                if not flag:
                    run_start = None
                    continue
                if run_start is None:
                    run_start = traj.t[i]
                if traj.t[i] - run_start >= CHARGE_SECONDS - TIME_EPS:
                    charged[i] = True
        channels[CHARGED_CHANNEL] = np.logical_or.accumulate(charged)
    return traj.with_channels(channels)


def polyline_trajectory(points, times, dt: float) -> TimedTrajectory:
    """Straight-line interpolation through ``points`` at ``times``, sampled every ``dt``."""
    base = TimedTrajectory(times, [p[0] for p in points], [p[1] for p in points])
    if len(base) == 1:
        return base
    return resample(base, dt)


# -- text export --------------------------------------------------------------


def format_trajectory(traj: TimedTrajectory) -> str:
    names = list(traj.channels)
    lines = [" ".join(["t", "x", "y", *names])]
    for i in range(len(traj)):
        row = [repr(float(traj.t[i])), repr(float(traj.x[i])), repr(float(traj.y[i]))]
        row += ["1" if traj.channels[n][i] else "0" for n in names]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def parse_trajectory(text: str) -> TimedTrajectory:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0][:3] != ["t", "x", "y"]:
        raise ValueError("trajectory text must start with a 't x y ...' header")
    names = rows[0][3:]
    body = rows[1:]
    for n, r in enumerate(body, start=2):
        if len(r) != 3 + len(names):
            raise ValueError(f"line {n}: expected {3 + len(names)} fields, got {len(r)}")
    t = [float(r[0]) for r in body]
    x = [float(r[1]) for r in body]
    y = [float(r[2]) for r in body]
    channels = {name: [r[3 + j] == "1" for r in body] for j, name in enumerate(names)}
    return TimedTrajectory(t, x, y, channels)


def save_trajectory(traj: TimedTrajectory, path) -> None:
    Path(path).write_text(format_trajectory(traj), encoding="utf-8")


def load_trajectory(path) -> TimedTrajectory:
    return parse_trajectory(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "TimedTrajectory", "SubgoalSequence", "TimedWaypoints", "resample", "derive_channels",
    "polyline_trajectory", "format_trajectory", "parse_trajectory", "save_trajectory",
    "load_trajectory", "resolve_target", "format_target", "CHARGE_SECONDS", "ScenarioError",
]
