"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import itertools
import math
import random
import re
import time

import numpy as np
import pytest

import oracle
from helpers import SMALL_WORLD, SUITE, ScriptedBackend, failure_patterns, fig3_tasks, random_formula, random_trajectory, scripted_factory
from stlplan.backend import OracleBackend, PlanRequest
from stlplan.backend.prompts import task_prompt
from stlplan.bench import Task, read_log, recompute_from_logs, run_ablation, run_suite
from stlplan.motion import BuiltinGains, ControllerHandle, builtin_controller, evaluate_case, simulate, simulate_states
from stlplan.motion.controller import Controller
from stlplan.pipeline import PipelineConfig, run_pipeline
from stlplan.signal import TimedWaypoints
from stlplan.stl import parse_stl, print_stl, robustness_signal
from stlplan.world import scenario_from_dict

TASKS = fig3_tasks()


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return emit


def test_1_engine_matches_brute_force_oracle(report):
    rng = random.Random(20240601)
    start = time.perf_counter()
    worst, mismatches, undefined = 0.0, 0, 0
    for _ in range(1000):
        f = random_formula(rng, rng.randint(0, 4))
        tr = random_trajectory(rng, max_len=10)
        got = robustness_signal(f, tr, SMALL_WORLD)[0]
        ref = oracle.robustness_at(f, tr, SMALL_WORLD)
        if ref is None:
            undefined += 1
            mismatches += not math.isnan(got)
            continue
        err = abs(got - ref)
        worst = max(worst, err)
        mismatches += not err <= 1e-9
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    report(1, ok, f"1000 instances, {mismatches} mismatches, max error {worst:.1e}, {undefined} undefined on both sides, {elapsed:.2f} s")
    assert ok


def test_2_parser_round_trip(report):
    rng = random.Random(7)
    failures = 0
    for _ in range(500):
        f = random_formula(rng, rng.randint(0, 5))
        failures += parse_stl(print_stl(f)) != f
    parsed = 0
    for task in TASKS.values():
        parse_stl(task.stl)
        parsed += 1
    ok = failures == 0 and parsed == 3
    report(2, ok, f"500 generated formulas, {failures} round-trip failures; {parsed}/3 fixture formulas parse")
    assert ok


def _gates_in_order(log):
    passed = {"logical": False, "temporal": False}
    for e in log:
        if e["event"] == "call" and e["stage"] == "time" and not passed["logical"]:
            return False
        if e["event"] == "call" and e["stage"] == "trajectory" and not passed["temporal"]:
            return False
        if e["event"] == "verify" and e["stage"] in passed and e["passed"]:
            passed[e["stage"]] = True
        if e["event"] == "call" and e["stage"] == "task":
            # a fresh round must earn both gates again
            if passed["logical"] and passed["temporal"]:
                passed = {"logical": False, "temporal": False}
    return True


def test_3_pipeline_gate_behaviour(report):
    task = TASKS["household-fig3a"]
    config = PipelineConfig()
    config.library()
    start = time.perf_counter()
    bad = []
    for k in itertools.product(range(3), repeat=3):
        be = ScriptedBackend(*k)
        r = run_pipeline(task.instruction, task.formula, task.scenario, be, config, task.id)
        want = {"task": k[0] + 1, "time": k[1] + 1, "trajectory": k[2] + 1}
        if not (r.success and r.artifacts.calls == want and _gates_in_order(r.log)):
            bad.append(k)

    def run(*k):
        be = ScriptedBackend(*k)
        return be, run_pipeline(task.instruction, task.formula, task.scenario, be, config, task.id)

    be, r = run(5, 0, 0)
    abort_task = not r.success and be.order == ["task"] * 5
    be, r = run(0, 5, 0)
    abort_time = not r.success and be.order == ["task"] + ["time"] * 5
    be, r = run(0, 0, 10)
    restart = r.success and be.order == ["task", "time"] + ["trajectory"] * 10 + ["task", "time", "trajectory"]
    be, r = run(0, 0, 30)
    exhausted = not r.success and r.artifacts.calls == {"task": 3, "time": 3, "trajectory": 30}
    elapsed = time.perf_counter() - start
    ok = not bad and abort_task and abort_time and restart and exhausted and elapsed < 5
    report(
        3, ok,
        f"27 combinations ({len(bad)} wrong); task abort {abort_task}, time abort {abort_time}, "
        f"restart {restart}, full exhaustion {exhausted}; {elapsed:.2f} s",
    )
    assert ok


def test_4_oracle_solves_fixtures(report):
    start = time.perf_counter()
    lines, ok = [], True
    for tid in sorted(TASKS):
        task = TASKS[tid]
        r = run_pipeline(task.instruction, task.formula, task.scenario, OracleBackend(), PipelineConfig(sim_dt=0.05), tid)
        retries = sum(r.artifacts.calls.values()) - 3
        good = r.success and r.artifacts.rho >= 0 and retries == 0
        ok &= good
        lines.append(f"{tid} rho={r.artifacts.rho:.3f} retries={retries}" if r.success else f"{tid} failed")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    report(4, ok, "; ".join(lines) + f"; {elapsed:.2f} s")
    assert ok


def test_5_motional_verification(report):
    config = PipelineConfig()
    library = config.library()
    healthy = []
    for case in library:
        sc = case.scenario
        healthy.append(evaluate_case(case, simulate(builtin_controller(sc.v_max, sc.omega_max), case.waypoints, sc)))
    failed = []
    for case in library:
        sc = case.scenario
        crippled = ControllerHandle("builtin", sc.v_max, sc.omega_max, BuiltinGains(speed_cap=0.1))
        rho = evaluate_case(case, simulate(crippled, case.waypoints, sc))
        if rho < 0:
            failed.append(case.id)
    tight = [c for c in failed if "_d0.8" in c]
    ok = len(library) >= 12 and min(healthy) >= 0 and bool(tight)
    report(
        5, ok,
        f"builtin passes {sum(r >= 0 for r in healthy)}/{len(library)} cases (min rho {min(healthy):.3f}); "
        f"10% speed cap fails {len(failed)} cases, {len(tight)} with the tightest deadline",
    )
    assert ok


class _Random(Controller):
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def command(self, state, target, t):
        return float(self.rng.uniform(-1.0, 3.0)), float(self.rng.uniform(-6.0, 6.0))


class _RandomHandle:
    capture_radius = 0.1

    def __init__(self, seed):
        self.seed = seed

    def open(self, v_max=None, omega_max=None):
        return _Random(self.seed)


def test_6_simulation_physics(report):
    sc = scenario_from_dict(
        {
            "name": "open",
            "v_max": 1.3,
            "omega_max": 2.5,
            "initial_state": {"x": 0.0, "y": 0.0, "theta": 0.5},
            "regions": [{"label": "A", "kind": "room", "x0": -1, "y0": -1, "x1": 1, "y1": 1}],
        }
    )
    dt = 0.05
    wp = TimedWaypoints(["A"], [10_000 * dt])
    _, xs, ys, th = simulate_states(_RandomHandle(3), wp, sc, dt)
    steps = len(xs) - 1
    d = np.hypot(np.diff(xs), np.diff(ys))
    dth = np.abs(np.angle(np.exp(1j * np.diff(th))))
    within = bool(np.all(d <= sc.v_max * dt + 1e-9) and np.all(dth <= sc.omega_max * dt + 1e-9))
    a = simulate(_RandomHandle(11), wp, sc, dt)
    b = simulate(_RandomHandle(11), wp, sc, dt)
    same = a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes() and a.t.tobytes() == b.t.tobytes()
    ok = steps == 10_000 and within and same
    report(
        6, ok,
        f"{steps} steps, max displacement {d.max():.6f} <= {sc.v_max * dt:.6f}, "
        f"max turn {dth.max():.6f} <= {sc.omega_max * dt:.6f}; same seed bit-identical: {same}",
    )
    assert ok


def test_7_ablation_harness(report):
    clean = 0
    for task in TASKS.values():
        req = PlanRequest("task", task.id, 0, task.instruction, task.scenario, task.formula, ablation_no_stl=True)
        text = task_prompt(req).text()
        clean += (
            "STL" not in text
            and "Temporal Logic" not in text
            and print_stl(task.formula) not in text
            and not re.search(r"\b(?:F|G|U)\[|\b(?:in|holds)\(", text)
        )
    ab = run_ablation(SUITE, lambda t: OracleBackend())

    def outcome(rep):
        return [(o.task_id, o.success, o.rho, o.calls) for o in rep.outcomes]

    unchanged = outcome(ab.with_stl) == outcome(ab.without_stl) and all(v == 0 for v in ab.sr_delta.values())
    ok = clean == 3 and unchanged
    report(7, ok, f"{clean}/3 ablated task prompts free of STL; oracle outcomes unchanged: {unchanged}")
    assert ok


def test_8_metrics_integrity(report, tmp_path):
    base = sorted(TASKS.values(), key=lambda t: t.id)
    tasks = [Task(f"mock{i:02d}", base[i % 3].instruction, base[i % 3].stl, base[i % 3].scenario) for i in range(20)]
    patterns = failure_patterns(2024, 20)
    rep = run_suite(tasks, scripted_factory(patterns))
    rep.write(tmp_path)
    again = recompute_from_logs(read_log(tmp_path / "runlog.jsonl"))
    m = rep.metrics["all"]
    ok = again == rep.metrics and 0 < m["SR"] < 1
    report(
        8, ok,
        f"20 tasks, {len(set(patterns))} distinct failure patterns, SR {m['SR']:.2f}, AC {m['AC']:.2f}, "
        f"AT {m['AT']:.2e} s; recomputed from log equals report: {again == rep.metrics}",
    )
    assert ok
