"""Suite runner and SR / AT / AC metrics.

SR is the fraction of attempted tasks that succeeded, AT the mean wall-clock
seconds per backend call and AC the mean number of backend calls per task.
Tasks whose backend was unreachable are reported separately and left out of
every metric.  Sums use ``math.fsum`` so aggregates do not depend on task
order.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import yaml

from .backend import STAGES, PlannerBackend, TransportError
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .stl import StlSyntaxError, UnboundPredicateError, bind, parse_stl
from .world import SCENARIO_DIR, Scenario, ScenarioError, builtin_scenario, load_scenario

log = logging.getLogger(__name__)


class SuiteError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    instruction: str
    stl: str
    scenario: Scenario

    @property
    def formula(self):
        return parse_stl(self.stl)


def _resolve_scenario(ref: str, base: Path) -> Scenario:
    path = (base / ref).resolve()
    if path.exists():
        return load_scenario(path)
    if (SCENARIO_DIR / f"{ref}.scn").exists():
        return builtin_scenario(ref)
    raise SuiteError(f"scenario {ref!r} not found (looked for {path})")


def load_suite(path) -> list[Task]:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise SuiteError(f"cannot read suite {path}: {exc}") from None
    records = doc.get("tasks") if isinstance(doc, dict) else doc
    if not isinstance(records, list) or not records:
        raise SuiteError(f"suite {path} must list tasks")
    tasks, seen, cache = [], set(), {}
    for n, rec in enumerate(records):
        where = f"{path.name} task {n}"
        if not isinstance(rec, dict):
            raise SuiteError(f"{where}: expected a mapping")
        missing = [k for k in ("instruction", "stl", "scenario") if k not in rec]
        if missing:
            raise SuiteError(f"{where}: missing {', '.join(missing)}")
        task_id = str(rec.get("id", f"task{n:03d}"))
        if task_id in seen:
            raise SuiteError(f"{where}: duplicate id {task_id!r}")
        seen.add(task_id)
        ref = str(rec["scenario"])
        try:
            if ref not in cache:
                cache[ref] = _resolve_scenario(ref, path.parent)
            scenario = cache[ref]
            bind(parse_stl(rec["stl"]), scenario)
        except (StlSyntaxError, UnboundPredicateError, ScenarioError) as exc:
            raise SuiteError(f"{where} ({task_id}): {exc}") from None
        tasks.append(Task(task_id, str(rec["instruction"]), str(rec["stl"]), scenario))
    return tasks


@dataclass
class TaskOutcome:
    task_id: str
    scenario: str
    success: bool
    errored: bool = False
    error: str = ""
    reason: str = ""
    rho: Optional[float] = None
    calls: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)
    log: list = field(default_factory=list, repr=False)
    result: Optional[PipelineResult] = field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "id": self.task_id, "scenario": self.scenario, "success": self.success,
            "errored": self.errored, "error": self.error, "reason": self.reason, "rho": self.rho,
            "calls": dict(self.calls),
        }


def run_task(task: Task, backend: PlannerBackend, config: PipelineConfig) -> TaskOutcome:
    try:
        result = run_pipeline(task.instruction, task.formula, task.scenario, backend, config, task.id)
    except TransportError as exc:
        log.warning("%s: backend unreachable: %s", task.id, exc)
        return TaskOutcome(
            task.id, task.scenario.name, False, errored=True, error=str(exc),
            log=[{"task_id": task.id, "stage": "pipeline", "event": "error", "diagnostic": str(exc)}],
        )
    art = result.artifacts
    return TaskOutcome(
        task.id, task.scenario.name, result.success, reason=result.reason,
        rho=art.rho if result.success else None,
        calls=dict(art.calls), seconds={k: list(v) for k, v in art.seconds.items()},
        log=result.log, result=result,
    )


def _metrics(n_attempted: int, n_success: int, calls: dict, seconds: dict) -> dict:
    total_calls = sum(calls.get(s, 0) for s in STAGES)
    all_seconds = [x for s in STAGES for x in seconds.get(s, [])]
    out = {
        "tasks": n_attempted,
        "SR": n_success / n_attempted if n_attempted else 0.0,
        "AT": math.fsum(all_seconds) / total_calls if total_calls else 0.0,
        "AC": total_calls / n_attempted if n_attempted else 0.0,
        "stages": {},
    }
    for s in STAGES:
        c = calls.get(s, 0)
        out["stages"][s] = {
            "calls": c,
            "AT": math.fsum(seconds.get(s, [])) / c if c else 0.0,
            "AC": c / n_attempted if n_attempted else 0.0,
        }
    return out


def aggregate(outcomes: list[TaskOutcome]) -> dict:
    """Per-scenario and overall metrics from task outcomes."""
    groups = defaultdict(list)
    for o in outcomes:
        groups[o.scenario].append(o)
    groups["all"] = list(outcomes)
    out = {}
    for name in sorted(groups):
        rows = [o for o in groups[name] if not o.errored]
        calls = {s: sum(o.calls.get(s, 0) for o in rows) for s in STAGES}
        seconds = {s: [x for o in rows for x in o.seconds.get(s, [])] for s in STAGES}
        m = _metrics(len(rows), sum(o.success for o in rows), calls, seconds)
        m["errored"] = len(groups[name]) - len(rows)
        out[name] = m
    return out


def recompute_from_logs(records) -> dict:
    """Rebuild the metrics from raw run-log records alone."""
    scenario_of, outcome, calls, seconds, errored = {}, {}, defaultdict(dict), defaultdict(dict), set()
    for r in records:
        tid = r["task_id"]
        if r["event"] == "task":
            scenario_of[tid] = r["scenario"]
        elif r["event"] == "call":
            calls[tid][r["stage"]] = calls[tid].get(r["stage"], 0) + 1
            seconds[tid].setdefault(r["stage"], []).append(r["seconds"])
        elif r["event"] == "result":
            outcome[tid] = bool(r["passed"])
        elif r["event"] == "error":
            errored.add(tid)
    groups = defaultdict(list)
    for tid, scen in scenario_of.items():
        groups[scen].append(tid)
        groups["all"].append(tid)
    out = {}
    for name in sorted(groups):
        ok = [t for t in groups[name] if t not in errored]
        c = {s: sum(calls[t].get(s, 0) for t in ok) for s in STAGES}
        sec = {s: [x for t in ok for x in seconds[t].get(s, [])] for s in STAGES}
        m = _metrics(len(ok), sum(outcome.get(t, False) for t in ok), c, sec)
        m["errored"] = len(groups[name]) - len(ok)
        out[name] = m
    return out


@dataclass
class BenchReport:
    metrics: dict
    outcomes: list
    config: dict
    backend: str = ""

    @classmethod
    def from_outcomes(cls, outcomes, config: PipelineConfig, backend: str = "") -> "BenchReport":
        outcomes = sorted(outcomes, key=lambda o: o.task_id)
        return cls(aggregate(outcomes), outcomes, config.to_dict(), backend)

    @property
    def all_success(self) -> bool:
        return all(o.success for o in self.outcomes)

    def log_records(self) -> list[dict]:
        out = []
        for o in self.outcomes:
            out.append({"task_id": o.task_id, "event": "task", "scenario": o.scenario})
            out.extend(o.log)
        return out

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "config": self.config,
            "metrics": self.metrics,
            "tasks": [o.row() for o in self.outcomes],
        }

    def table(self) -> str:
        lines = [f"{'scenario':<14}{'tasks':>6}{'SR':>9}{'AT (s)':>10}{'AC':>7}  AC task/time/traj  errored"]
        for name, m in self.metrics.items():
            st = m["stages"]
            split = "/".join(f"{st[s]['AC']:.2f}" for s in STAGES)
            lines.append(
                f"{name:<14}{m['tasks']:>6}{100 * m['SR']:>8.2f}%{m['AT']:>10.4f}{m['AC']:>7.2f}  {split:<17}  {m['errored']}"
            )
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.yaml").write_text(yaml.safe_dump(self.to_dict(), sort_keys=False), encoding="utf-8")
        (out / "report.txt").write_text(self.table(), encoding="utf-8")
        with open(out / "runlog.jsonl", "w", encoding="utf-8") as fh:
            for rec in self.log_records():
                fh.write(json.dumps(rec) + "\n")
        return out


def read_log(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


BackendFactory = Callable[[Task], PlannerBackend]


def run_suite(tasks, backend_factory: BackendFactory, config: PipelineConfig = PipelineConfig(), jobs: int = 1, backend_name: str = "") -> BenchReport:
    """Run every task with a fresh backend from ``backend_factory``."""
    if isinstance(tasks, (str, Path)):
        tasks = load_suite(tasks)
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    config.library()  # load once before any worker thread starts

    def one(task):
        return run_task(task, backend_factory(task), config)

    if jobs == 1:
        outcomes = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, tasks))
    return BenchReport.from_outcomes(outcomes, config, backend_name)


@dataclass
class AblationReport:
    with_stl: BenchReport
    without_stl: BenchReport

    @property
    def sr_delta(self) -> dict:
        """SR without STL minus SR with STL, per scenario."""
        return {
            name: self.without_stl.metrics[name]["SR"] - m["SR"]
            for name, m in self.with_stl.metrics.items()
            if name in self.without_stl.metrics
        }

    def to_dict(self) -> dict:
        return {
            "sr_delta": self.sr_delta,
            "with_stl": self.with_stl.to_dict(),
            "without_stl": self.without_stl.to_dict(),
        }

    def table(self) -> str:
        lines = [f"{'scenario':<14}{'SR stl':>9}{'SR no-stl':>11}{'delta':>9}"]
        for name, d in self.sr_delta.items():
            a = self.with_stl.metrics[name]["SR"]
            b = self.without_stl.metrics[name]["SR"]
            lines.append(f"{name:<14}{100 * a:>8.2f}%{100 * b:>10.2f}%{100 * d:>+8.2f}%")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        self.with_stl.write(out / "with_stl")
        self.without_stl.write(out / "without_stl")
        (out / "ablation.yaml").write_text(yaml.safe_dump(self.to_dict(), sort_keys=False), encoding="utf-8")
        (out / "ablation.txt").write_text(self.table(), encoding="utf-8")
        return out


def run_ablation(tasks, backend_factory: BackendFactory, config: PipelineConfig = PipelineConfig(), jobs: int = 1, backend_name: str = "") -> AblationReport:
    """Two runs that differ only in whether the task prompt carries STL."""
    if isinstance(tasks, (str, Path)):
        tasks = load_suite(tasks)
    base = run_suite(tasks, backend_factory, replace(config, ablation_no_stl=False), jobs, backend_name)
    ablated = run_suite(tasks, backend_factory, replace(config, ablation_no_stl=True), jobs, backend_name)
    return AblationReport(base, ablated)
