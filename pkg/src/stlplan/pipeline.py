"""Cascaded task, time and trajectory planning with three verification gates.

Each stage retries with feedback from the previous failed attempt.  Running
out of task or time attempts aborts; running out of trajectory attempts
restarts from task planning, up to ``n_max_outer`` rounds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Optional

import yaml

from .backend import Feedback, PlannerBackend, TransportError, UnparseableOutput
from .motion import DEFAULT_LIBRARY, CaseLibrary, ControllerHandle, load_library, motional_verify, simulate
from .motion.controller import ControllerError
from .reports import VerificationReport, describe_path
from .signal import (
    CHARGE_SECONDS,
    SubgoalSequence,
    TimedTrajectory,
    TimedWaypoints,
    derive_channels,
    polyline_trajectory,
    resolve_target,
)
from .stl import EmptyWindowError, Formula, bind, explain, robustness, untimed
from .world import Scenario, ScenarioError

log = logging.getLogger(__name__)

# extra pause added to each charger visit in the logical pseudo-trajectory
_CHARGE_PAD = 0.5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    n_max_outer: int = 3
    n_max_task: int = 5
    n_max_time: int = 5
    n_max_traj: int = 10
    resample_dt: float = 0.05
    sim_dt: float = 0.05
    ablation_no_stl: bool = False
    case_library: Optional[str] = None

    def __post_init__(self):
        for name in ("n_max_outer", "n_max_task", "n_max_time", "n_max_traj"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("resample_dt", "sim_dt"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a mapping")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def library(self) -> CaseLibrary:
        return _library(str(self.case_library or DEFAULT_LIBRARY))


@lru_cache(maxsize=8)
def _library(path: str) -> CaseLibrary:
    return load_library(path)


# -- verification gates -------------------------------------------------------


def _path_diagnostic(formula, traj, scenario) -> tuple[str, tuple]:
    path = explain(formula, traj, scenario)
    return describe_path(path), tuple(path)


def logical_pseudo_trajectory(subgoals: SubgoalSequence, scenario: Scenario, dt: float) -> TimedTrajectory:
    """Constant-speed straight legs from the start through every subgoal.

    Charger subgoals get a pause long enough to charge, since the untimed
    check cannot otherwise see a charge.
    """
    s0 = scenario.initial_state
    points, times = [(s0.x, s0.y)], [0.0]
    for g in subgoals:
        p = resolve_target(scenario, g)
        leg = math.dist(points[-1], p)
        points.append(p)
        times.append(times[-1] + max(leg / scenario.v_max, dt))
        if isinstance(g, str) and scenario.regions[g].kind == "charger":
            points.append(p)
            times.append(times[-1] + CHARGE_SECONDS + _CHARGE_PAD)
    return derive_channels(polyline_trajectory(points, times, dt), scenario)


def logical_verify(subgoals: SubgoalSequence, formula: Formula, scenario: Scenario, resample_dt: float = 0.05) -> VerificationReport:
    """Spatial check: the untimed formula on the straight-leg pseudo-trajectory."""
    if len(subgoals) == 0:
        raise ValueError("subgoal sequence must be non-empty")
    try:
        traj = logical_pseudo_trajectory(subgoals, scenario, resample_dt)
    except ScenarioError as exc:
        return VerificationReport("logical", False, diagnostic=str(exc))
    spatial = untimed(formula)
    rho = robustness(spatial, traj, scenario)
    if rho >= 0:
        return VerificationReport("logical", True, rho, "spatially consistent")
    text, path = _path_diagnostic(spatial, traj, scenario)
    return VerificationReport("logical", False, rho, text, path)


def reach_margin(waypoints: TimedWaypoints, scenario: Scenario) -> tuple[float, str]:
    """min over legs of ``v_max * dt - length`` (meters), with the worst leg described."""
    s0 = scenario.initial_state
    prev, t_prev = (s0.x, s0.y), 0.0
    worst, where = math.inf, ""
    for g, p, t in zip(waypoints.targets, waypoints.points(scenario), waypoints.times):
        length = math.dist(prev, p)
        margin = scenario.v_max * (t - t_prev) - length
        if margin < worst:
            worst = margin
            need = length / (t - t_prev) if t > t_prev else math.inf
            where = f"leg to {g} at t={t:g} needs {need:.3g} m/s, v_max is {scenario.v_max:g} m/s"
        prev, t_prev = p, t
    return worst, where


def waypoint_trajectory(waypoints: TimedWaypoints, scenario: Scenario, dt: float) -> TimedTrajectory:
    s0 = scenario.initial_state
    points, times = list(waypoints.points(scenario)), list(waypoints.times)
    if times[0] > 0:
        points.insert(0, (s0.x, s0.y))
        times.insert(0, 0.0)
    return derive_channels(polyline_trajectory(points, times, dt), scenario)


def temporal_verify(waypoints: TimedWaypoints, formula: Formula, scenario: Scenario, resample_dt: float = 0.05) -> VerificationReport:
    """Full formula on the interpolated waypoints, plus leg reachability.

    The reported robustness is the minimum of the formula's robustness and
    the reachability margin, so it is negative when either fails.
    """
    traj = waypoint_trajectory(waypoints, scenario, resample_dt)
    margin, where = reach_margin(waypoints, scenario)
    try:
        rho_stl = robustness(formula, traj, scenario)
    except EmptyWindowError as exc:
        return VerificationReport("temporal", False, diagnostic=f"trajectory shorter than horizon: {exc}")
    rho = min(rho_stl, margin)
    if rho >= 0:
        return VerificationReport("temporal", True, rho, "temporally feasible")
    if margin < 0 and margin <= rho_stl:
        return VerificationReport("temporal", False, rho, f"unreachable: {where}")
    text, path = _path_diagnostic(formula, traj, scenario)
    if margin < 0:
        text += f"; also unreachable: {where}"
    return VerificationReport("temporal", False, rho, text, path)


def task_trajectory_check(traj: TimedTrajectory, formula: Formula, scenario: Scenario) -> VerificationReport:
    traj = derive_channels(traj, scenario)
    try:
        rho = robustness(formula, traj, scenario)
    except EmptyWindowError as exc:
        return VerificationReport("motional-functional", False, diagnostic=f"trajectory shorter than horizon: {exc}")
    if rho >= 0:
        return VerificationReport("motional-functional", True, rho, "task trajectory satisfies the formula")
    text, path = _path_diagnostic(formula, traj, scenario)
    return VerificationReport("motional-functional", False, rho, "task trajectory: " + text, path)


# -- orchestration ------------------------------------------------------------


@dataclass
class PlanArtifacts:
    subgoals: Optional[SubgoalSequence] = None
    waypoints: Optional[TimedWaypoints] = None
    controller: Optional[ControllerHandle] = None
    trajectory: Optional[TimedTrajectory] = None
    reports: list = field(default_factory=list)
    calls: dict = field(default_factory=lambda: {"task": 0, "time": 0, "trajectory": 0})
    seconds: dict = field(default_factory=lambda: {"task": [], "time": [], "trajectory": []})

    @property
    def rho(self) -> Optional[float]:
        return self.reports[-1].rho if self.reports and self.reports[-1].passed else None

    def stage_seconds(self, stage: str) -> float:
        return math.fsum(self.seconds[stage])


@dataclass
class PipelineResult:
    task_id: str
    success: bool
    artifacts: PlanArtifacts
    log: list
    reason: str = ""

    @property
    def total_calls(self) -> int:
        return sum(self.artifacts.calls.values())


class _Run:
    def __init__(self, instruction, formula, scenario, backend, config, task_id):
        self.instruction = instruction
        self.formula = formula
        self.scenario = scenario
        self.backend = backend
        self.config = config
        self.task_id = task_id
        self.art = PlanArtifacts()
        self.log = []
        self.outer = 0

    def record(self, **entry):
        entry = {"task_id": self.task_id, "outer": self.outer, **entry}
        self.log.append(entry)
        log.debug("%s", entry)

    def call(self, stage: str, fn, **kwargs):
        """Invoke a backend stage, logging the call even when its output is unparseable."""
        attempt = self.art.calls[stage]
        before = len(self.backend.calls)
        try:
            return fn(task_id=self.task_id, attempt=attempt, **kwargs), None
        except UnparseableOutput as exc:
            return None, exc
        finally:
            new = self.backend.calls[before:]
            for rec in new:
                self.art.calls[stage] += 1
                self.art.seconds[stage].append(rec.seconds)
                self.record(stage=stage, event="call", attempt=attempt, seconds=rec.seconds)

    def verdict(self, report: VerificationReport, attempt: int):
        self.art.reports.append(report)
        self.record(
            stage=report.stage, event="verify", attempt=attempt, rho=report.rho,
            passed=report.passed, diagnostic=report.diagnostic,
        )

    def feedback(self, raw: str, report: VerificationReport, task_stage: bool = False) -> Feedback:
        diagnostic = report.diagnostic
        if task_stage and self.config.ablation_no_stl:
            # the path names subformulas; keep formula text out of ablated prompts
            diagnostic = "plan rejected" + (f" (robustness {report.rho:.4g})" if report.rho is not None else "")
        return Feedback(raw, diagnostic)

    def unparseable(self, stage: str, exc: UnparseableOutput, attempt: int) -> VerificationReport:
        report = VerificationReport(stage, False, diagnostic=f"unparseable output: {exc.reason}")
        self.verdict(report, attempt)
        return report

    def task_loop(self) -> Optional[SubgoalSequence]:
        psi = None
        for _ in range(self.config.n_max_task):
            attempt = self.art.calls["task"]
            seq, err = self.call(
                "task", self.backend.task_plan, instruction=self.instruction, formula=self.formula,
                scenario=self.scenario, feedback=psi, ablation_no_stl=self.config.ablation_no_stl,
            )
            if err is not None:
                psi = self.feedback(err.raw, self.unparseable("logical", err, attempt), True)
                continue
            report = logical_verify(seq, self.formula, self.scenario, self.config.resample_dt)
            self.verdict(report, attempt)
            if report.passed:
                return seq
            psi = self.feedback(seq.raw, report, True)
        return None

    def time_loop(self, seq: SubgoalSequence) -> Optional[TimedWaypoints]:
        psi = None
        for _ in range(self.config.n_max_time):
            attempt = self.art.calls["time"]
            wp, err = self.call(
                "time", self.backend.time_plan, instruction=self.instruction, subgoals=seq,
                scenario=self.scenario, feedback=psi, formula=self.formula,
            )
            if err is not None:
                psi = self.feedback(err.raw, self.unparseable("temporal", err, attempt))
                continue
            report = temporal_verify(wp, self.formula, self.scenario, self.config.resample_dt)
            self.verdict(report, attempt)
            if report.passed:
                return wp
            psi = self.feedback(wp.raw, report)
        return None

    def trajectory_loop(self, wp: TimedWaypoints) -> bool:
        psi = None
        library = self.config.library()
        for _ in range(self.config.n_max_traj):
            attempt = self.art.calls["trajectory"]
            handle, err = self.call(
                "trajectory", self.backend.trajectory_plan, instruction=self.instruction,
                scenario=self.scenario, v_max=self.scenario.v_max, omega_max=self.scenario.omega_max,
                feedback=psi,
            )
            if err is not None:
                psi = self.feedback(err.raw, self.unparseable("motional-syntax", err, attempt))
                continue
            report = motional_verify(handle, library, self.config.sim_dt)
            self.verdict(report, attempt)
            if report.passed:
                try:
                    traj = simulate(handle, wp, self.scenario, self.config.sim_dt)
                    report = task_trajectory_check(traj, self.formula, self.scenario)
                except ControllerError as exc:
                    traj, report = None, VerificationReport("motional-functional", False, diagnostic=str(exc))
                self.verdict(report, attempt)
                if report.passed:
                    self.art.controller, self.art.trajectory = handle, traj
                    return True
            psi = self.feedback(handle.source, report)
        return False

    def run(self) -> PipelineResult:
        for outer in range(self.config.n_max_outer):
            self.outer = outer
            art = self.art
            art.subgoals = art.waypoints = art.controller = art.trajectory = None
            seq = self.task_loop()
            if seq is None:
                return self.finish(False, f"task planning failed after {self.config.n_max_task} attempts")
            art.subgoals = seq
            wp = self.time_loop(seq)
            if wp is None:
                return self.finish(False, f"time planning failed after {self.config.n_max_time} attempts")
            art.waypoints = wp
            if self.trajectory_loop(wp):
                return self.finish(True, "")
            log.info("%s: trajectory stage exhausted, restarting from task planning", self.task_id)
        return self.finish(False, f"trajectory stage failed in all {self.config.n_max_outer} rounds")

    def finish(self, success: bool, reason: str) -> PipelineResult:
        self.record(stage="pipeline", event="result", passed=success, diagnostic=reason)
        return PipelineResult(self.task_id, success, self.art, self.log, reason)


def run_pipeline(
    instruction: str,
    formula: Formula,
    scenario: Scenario,
    backend: PlannerBackend,
    config: PipelineConfig = PipelineConfig(),
    task_id: str = "task",
) -> PipelineResult:
    """Plan ``instruction``/``formula`` in ``scenario``.

    Backend transport errors propagate; every other failure is returned as
    an unsuccessful result carrying the full report chain and run log.
    """
    bind(formula, scenario)
    return _Run(instruction, formula, scenario, backend, config, task_id).run()


__all__ = [
    "ConfigError", "PipelineConfig", "PlanArtifacts", "PipelineResult", "TransportError",
    "logical_verify", "temporal_verify", "task_trajectory_check", "reach_margin",
    "logical_pseudo_trajectory", "waypoint_trajectory", "run_pipeline",
]
