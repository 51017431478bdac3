"""Shared fixtures: suite tasks, a fake clock and a fault-injecting backend."""

import itertools
from pathlib import Path

from stlplan.backend import OracleBackend, formats
from stlplan.backend.oracle import allocate_times, avoided_regions
from stlplan.bench import load_suite
from stlplan.world import DATA_DIR

SUITE = DATA_DIR / "suites" / "fig3.yaml"
ROOT = Path(__file__).resolve().parent


def fig3_tasks():
    return {t.id: t for t in load_suite(SUITE)}


class FakeClock:
    """Advances by ``step`` seconds on every reading."""

    def __init__(self, step=0.25):
        self.now = 0.0
        self.step = step

    def __call__(self):
        self.now += self.step
        return self.now


class ScriptedBackend(OracleBackend):
    """Oracle that fails the first ``fail[stage]`` calls of each stage.

    Even-numbered failures are unparseable text; odd-numbered ones parse but
    violate the next gate (a plan through a forbidden region, timestamps too
    fast to follow, a controller limited to 10% speed).
    """

    def __init__(self, fail_task=0, fail_time=0, fail_traj=0, **kwargs):
        super().__init__(**kwargs)
        self.fail = {"task": fail_task, "time": fail_time, "trajectory": fail_traj}
        self.seen = {"task": 0, "time": 0, "trajectory": 0}
        self.order = []

    def generate(self, req, prompt):
        n = self.seen[req.stage]
        self.seen[req.stage] += 1
        self.order.append(req.stage)
        if n >= self.fail[req.stage]:
            return super().generate(req, prompt)
        garbage = n % 2 == 0
        if req.stage == "task":
            if garbage:
                return "I think the plan is to wander around.\n"
            avoid = sorted(avoided_regions(req.formula) & set(req.scenario.regions))
            if not avoid:
                return "I think the plan is to wander around.\n"
            return formats.format_subgoals([avoid[0]] + self.subgoals_for(req))
        if req.stage == "time":
            targets, times = allocate_times(list(req.subgoals), req.scenario, req.formula)
            if garbage:
                return formats.format_waypoints(targets, list(reversed(times)))
            return formats.format_waypoints(targets, [t / 20 for t in times])
        if garbage:
            return "```python\ndef broken(:\n```\n"
        return formats.format_builtin(speed_cap=0.1)


def failure_patterns(seed, n, limits=(5, 5, 10)):
    """Deterministic pseudo-random (k_task, k_time, k_traj) triples, some past the limits."""
    import random

    rng = random.Random(seed)
    out = []
    for _ in range(n):
        out.append(tuple(rng.choice([0, 0, 1, 2, lim, lim + 3]) for lim in limits))
    return out


def scripted_factory(patterns, clock_step=None):
    """Backend factory assigning ``patterns[i]`` to the i-th task id it sees."""
    counter = itertools.count()
    assigned = {}

    def factory(task):
        if task.id not in assigned:
            assigned[task.id] = patterns[next(counter) % len(patterns)]
        k = assigned[task.id]
        clock = FakeClock(clock_step) if clock_step else None
        kwargs = {"clock": clock} if clock else {}
        return ScriptedBackend(*k, **kwargs)

    return factory


# -- random formulas and trajectories ------------------------------------------

from stlplan.signal import TimedTrajectory  # noqa: E402
from stlplan.stl import UNBOUNDED, And, Finally, Globally, Iff, Implies, Interval, Not, Or, Predicate, Until  # noqa: E402
from stlplan.world import scenario_from_dict  # noqa: E402

SMALL_WORLD = scenario_from_dict(
    {
        "name": "small",
        "v_max": 1.0,
        "omega_max": 1.0,
        "initial_state": {"x": -0.5, "y": -0.5, "theta": 0.0},
        "regions": [
            {"label": "A", "kind": "room", "x0": 0.0, "y0": 0.0, "x1": 2.0, "y1": 2.0},
            {"label": "B", "kind": "goal", "x0": 1.0, "y0": 1.0, "x1": 3.0, "y1": 3.0},
            {"label": "K", "kind": "key-pickup", "x0": 2.0, "y0": 0.0, "x1": 3.0, "y1": 1.0},
            {"label": "C", "kind": "charger", "x0": 0.0, "y0": 2.0, "x1": 1.0, "y1": 3.0},
        ],
    }
)
ATOMS = [Predicate("in", n) for n in "ABKC"] + [Predicate("holds", "K"), Predicate("holds", "charged")]
BOUNDS = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]


def random_interval(rng):
    if rng.random() < 0.15:
        return UNBOUNDED
    lo, hi = sorted(rng.choice(BOUNDS + [rng.uniform(0, 4)]) for _ in range(2))
    return Interval(lo, hi)


def random_formula(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(ATOMS)
    op = rng.choice(["not", "and", "or", "->", "<->", "F", "G", "U"])
    if op == "not":
        return Not(random_formula(rng, depth - 1))
    if op in ("F", "G"):
        cls = Finally if op == "F" else Globally
        return cls(random_interval(rng), random_formula(rng, depth - 1))
    left, right = random_formula(rng, depth - 1), random_formula(rng, depth - 1)
    if op == "U":
        return Until(random_interval(rng), left, right)
    return {"and": And, "or": Or, "->": Implies, "<->": Iff}[op](left, right)


def random_trajectory(rng, max_len=10):
    n = rng.randint(1, max_len)
    t, x, y = [rng.choice([0.0, rng.uniform(0, 1)])], [rng.uniform(-1, 4)], [rng.uniform(-1, 4)]
    for _ in range(n - 1):
        t.append(t[-1] + rng.choice([0.5, 1.0, 1.5, rng.uniform(0.05, 2.0)]))
        r = rng.random()
        if r < 0.35:
            x.append(x[-1])
            y.append(y[-1])
        elif r < 0.5:
            # somewhere in charger C, so charging dwells occur
            x.append(rng.uniform(0, 1))
            y.append(rng.uniform(2, 3))
        else:
            x.append(rng.uniform(-1, 4))
            y.append(rng.uniform(-1, 4))
    return TimedTrajectory(t, x, y)
