"""Planner backend contract shared by the oracle, replay and LLM backends."""

from __future__ import annotations

import math
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..motion.controller import BuiltinGains, ControllerHandle, external_controller, write_program
from ..signal import SubgoalSequence, TimedWaypoints
from ..stl import Formula
from ..world import Scenario
from . import formats
from .errors import TransportError, UnparseableOutput  # noqa: F401
from .prompts import PromptBundle, task_prompt, time_prompt, trajectory_prompt

STAGES = ("task", "time", "trajectory")


@dataclass(frozen=True)
class Feedback:
    """What the next attempt sees about the previous failed one."""

    previous_output: str
    diagnostic: str


@dataclass(frozen=True)
class PlanRequest:
    stage: str
    task_id: str
    attempt: int
    instruction: str
    scenario: Scenario
    # visible to deterministic backends only; the time prompt never shows it
    formula: Optional[Formula] = None
    subgoals: Optional[SubgoalSequence] = None
    feedback: Optional[Feedback] = None
    ablation_no_stl: bool = False


@dataclass(frozen=True)
class CallRecord:
    stage: str
    task_id: str
    attempt: int
    seconds: float


@dataclass
class PlannerBackend:
    """Base class: builds the prompt, calls :meth:`generate`, parses the reply.

    Subclasses implement ``generate(request, prompt) -> str``.  Every call is
    timed with ``clock`` and appended to ``calls``.
    """

    clock: Callable[[], float] = field(default=time.perf_counter, repr=False)
    workdir: Optional[Path] = None
    calls: list = field(default_factory=list, init=False, repr=False)
    prompts: list = field(default_factory=list, init=False, repr=False)
    name = "base"

    def __post_init__(self):
        self._lock = threading.Lock()

    def generate(self, request: PlanRequest, prompt: PromptBundle) -> str:
        raise NotImplementedError

    def _call(self, request: PlanRequest, prompt: PromptBundle) -> str:
        start = self.clock()
        raw = self.generate(request, prompt)
        seconds = self.clock() - start
        with self._lock:
            self.calls.append(CallRecord(request.stage, request.task_id, request.attempt, seconds))
            self.prompts.append((request.stage, request.task_id, request.attempt, prompt))
        return raw

    # telemetry

    @property
    def call_count(self) -> int:
        return len(self.calls)

    @property
    def total_seconds(self) -> float:
        return math.fsum(c.seconds for c in self.calls)

    @property
    def average_call_time(self) -> float:
        return self.total_seconds / self.call_count if self.calls else 0.0

    # planner operations

    def task_plan(
        self,
        instruction: str,
        formula: Formula,
        scenario: Scenario,
        feedback: Optional[Feedback] = None,
        *,
        task_id: str = "",
        attempt: int = 0,
        ablation_no_stl: bool = False,
    ) -> SubgoalSequence:
        req = PlanRequest("task", task_id, attempt, instruction, scenario, formula, None, feedback, ablation_no_stl)
        raw = self._call(req, task_prompt(req))
        return formats.parse_subgoals(raw)

    def time_plan(
        self,
        instruction: str,
        subgoals: SubgoalSequence,
        scenario: Scenario,
        feedback: Optional[Feedback] = None,
        *,
        formula: Optional[Formula] = None,
        task_id: str = "",
        attempt: int = 0,
    ) -> TimedWaypoints:
        if len(subgoals) == 0:
            raise ValueError("time planning needs a non-empty subgoal sequence")
        req = PlanRequest("time", task_id, attempt, instruction, scenario, formula, subgoals, feedback)
        raw = self._call(req, time_prompt(req))
        wp = formats.parse_waypoints(raw)
        if wp.collapsed_targets() != subgoals.targets:
            raise UnparseableOutput(raw, "timed waypoints must list the subgoals in the given order")
        return wp

    def trajectory_plan(
        self,
        instruction: str,
        scenario: Scenario,
        v_max: float,
        omega_max: float,
        feedback: Optional[Feedback] = None,
        *,
        task_id: str = "",
        attempt: int = 0,
    ) -> ControllerHandle:
        if not (v_max > 0 and omega_max > 0):
            raise ValueError(f"limits must be positive, got v_max={v_max}, omega_max={omega_max}")
        req = PlanRequest("trajectory", task_id, attempt, instruction, scenario, None, None, feedback)
        raw = self._call(req, trajectory_prompt(req, v_max, omega_max))
        spec = formats.parse_controller(raw)
        if isinstance(spec, formats.BuiltinSpec):
            return ControllerHandle(
                "builtin", v_max, omega_max, BuiltinGains(**spec.gains), capture_radius=spec.capture, source=raw
            )
        if self.workdir is None:
            self.workdir = Path(tempfile.mkdtemp(prefix="stlplan-ctl-"))
        name = f"{task_id or 'task'}_{attempt}.py".replace("/", "_")
        path = write_program(spec, self.workdir, name)
        return external_controller(path, v_max, omega_max, source=raw)
