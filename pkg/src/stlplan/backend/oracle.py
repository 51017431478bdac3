"""Deterministic scripted backend.

Known task ids get their stored plan.  Anything else is planned by reading
the formula: reach targets are visited nearest-first along collision-free
straight legs (a visibility graph around forbidden boxes, with doors
passable only once their key is held), the nearest charger comes first when
the formula asks for a charge, and time is split in proportion to leg
length.
"""

from __future__ import annotations

import heapq
import math
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..stl import Finally, Globally, Not, Predicate, Until, horizon, walk
from ..stl.ast import And, Or
from ..world import BLOCKING_KINDS, CHARGED_CHANNEL, Scenario, nearest_charger
from . import formats
from .base import PlannerBackend, PlanRequest

PLAN_FILE = Path(__file__).resolve().parent.parent / "data" / "oracle_plans.yaml"
DEFAULT_DEADLINE = 30.0
TIME_FRACTION = 0.9
# extra time spent in a charger beyond the 3 s the channel needs
DWELL_SECONDS = 3.5
CLEARANCE = 0.2
_STEP = 0.05


@lru_cache(maxsize=None)
def _stored_plans(path: str) -> dict:
    p = Path(path)
    return yaml.safe_load(p.read_text(encoding="utf-8")) if p.exists() else {}


def reach_targets(formula) -> list[str]:
    """Region labels the formula asks to eventually enter (positive, under F or U)."""
    out = []

    def visit(f, positive, eventual):
        if isinstance(f, Predicate):
            if f.kind == "in" and positive and eventual and f.name not in out:
                out.append(f.name)
        elif isinstance(f, Not):
            visit(f.arg, not positive, eventual)
        elif isinstance(f, (And, Or)):
            visit(f.left, positive, eventual)
            visit(f.right, positive, eventual)
        elif isinstance(f, Finally):
            visit(f.arg, positive, True)
        elif isinstance(f, Globally):
            visit(f.arg, positive, eventual)
        elif isinstance(f, Until):
            visit(f.right, positive, True)

    visit(formula, True, False)
    return out


def avoided_regions(formula) -> set[str]:
    """Labels under ``G ... not in(X)``, i.e. regions that must never be entered."""
    out = set()

    def visit(f, under_g, positive):
        if isinstance(f, Predicate):
            if f.kind == "in" and under_g and not positive:
                out.add(f.name)
        elif isinstance(f, Not):
            visit(f.arg, under_g, not positive)
        elif isinstance(f, And):
            visit(f.left, under_g, positive)
            visit(f.right, under_g, positive)
        elif isinstance(f, Globally):
            visit(f.arg, True, positive)

    visit(formula, False, True)
    return out


def needs_charge(formula) -> bool:
    return any(isinstance(n, Predicate) and n.kind == "holds" and n.name == CHARGED_CHANNEL for n in walk(formula))


class _Router:
    """Shortest collision-free routes over a visibility graph.

    The search state is (node, keys held); a key is picked up by visiting
    its region's center, and a door is passable only with its key.
    """

    def __init__(self, scenario: Scenario, avoid: set[str]):
        self.sc = scenario
        self.blocked = [
            r for r in scenario.regions.values() if r.kind in BLOCKING_KINDS or r.label in avoid
        ]
        self.doors = {d: scenario.key_bindings[d] for d in scenario.labels("door") if d not in avoid}
        nodes = {}
        for r in scenario.regions.values():
            if r.kind not in BLOCKING_KINDS and r.label not in avoid:
                nodes[r.label] = r.center
        m = 2 * CLEARANCE
        for r in self.blocked:
            corners = ((r.x0 - m, r.y0 - m), (r.x1 + m, r.y0 - m), (r.x1 + m, r.y1 + m), (r.x0 - m, r.y1 + m))
            for cx, cy in corners:
                if self._free_point(cx, cy):
                    nodes[(round(cx, 3), round(cy, 3))] = (round(cx, 3), round(cy, 3))
        self.nodes = nodes
        self.keys = {k for k in scenario.labels("key-pickup") if k in nodes}
        self._edge_cache = {}

    def _free_point(self, x, y) -> bool:
        return all(r.signed_distance(x, y) < -CLEARANCE for r in self.blocked)

    def _edge_ok(self, a, b, keys: frozenset) -> bool:
        cache_key = (a, b, keys)
        hit = self._edge_cache.get(cache_key)
        if hit is not None:
            return hit
        (x0, y0), (x1, y1) = a, b
        n = max(2, int(math.ceil(math.dist(a, b) / _STEP)) + 1)
        xs, ys = np.linspace(x0, x1, n), np.linspace(y0, y1, n)
        ok = all(np.all(r.signed_distance(xs, ys) < -CLEARANCE) for r in self.blocked)
        if ok:
            for door, key in self.doors.items():
                if key not in keys and np.any(self.sc.regions[door].signed_distance(xs, ys) >= -CLEARANCE):
                    ok = False
                    break
        self._edge_cache[cache_key] = ok
        return ok

    def route(self, start, keys: frozenset, goal) -> Optional[tuple[float, list, frozenset]]:
        """Cheapest (length, node path, keys held at goal) from point ``start`` to node ``goal``."""
        start_id = ("__start__",)
        pos = dict(self.nodes)
        pos[start_id] = start
        best = {(start_id, keys): 0.0}
        heap = [(0.0, 0, start_id, keys, [])]
        tie = 1
        while heap:
            cost, _, node, held, path = heapq.heappop(heap)
            if node == goal:
                return cost, path, held
            if best.get((node, held), math.inf) < cost:
                continue
            for nxt, p in self.nodes.items():
                if nxt == node or not self._edge_ok(pos[node], p, held):
                    continue
                nheld = held | {nxt} if nxt in self.keys else held
                ncost = cost + math.dist(pos[node], p)
                if ncost < best.get((nxt, nheld), math.inf) - 1e-12:
                    best[(nxt, nheld)] = ncost
                    heapq.heappush(heap, (ncost, tie, nxt, nheld, path + [nxt]))
                    tie += 1
        return None


def heuristic_subgoals(formula, scenario: Scenario) -> list:
    """Nearest-unvisited-target plan for ``formula``; may be empty if nothing routes."""
    router = _Router(scenario, avoided_regions(formula))
    s0 = scenario.initial_state
    here, keys = (s0.x, s0.y), frozenset()
    todo = [t for t in reach_targets(formula) if scenario.regions[t].signed_distance(here[0], here[1]) < 0]
    plan, first = [], []
    if needs_charge(formula) and scenario.labels("charger"):
        first = [nearest_charger(scenario, here)]
        todo.insert(0, first[0])
    while todo:
        candidates = first or todo
        options = []
        for target in candidates:
            if target not in router.nodes:
                continue
            found = router.route(here, keys, target)
            if found is not None:
                options.append((found[0], target, found))
        if not options:
            break
        _, target, (_, path, keys) = min(options, key=lambda o: (o[0], o[1]))
        plan.extend(path)
        here = router.nodes[target]
        todo.remove(target)
        # anything entered on the way counts as visited
        todo = [t for t in todo if t not in path]
        first = []
    return plan


def allocate_times(targets, scenario: Scenario, formula) -> tuple[list, list]:
    """Split ``TIME_FRACTION`` of the deadline over the legs by length.

    Charger targets get a second entry ``DWELL_SECONDS`` later; the dwell is
    taken out of the moving budget.
    """
    h = horizon(formula) if formula is not None else math.inf
    total = TIME_FRACTION * (h if math.isfinite(h) and h > 0 else DEFAULT_DEADLINE)
    s0 = scenario.initial_state
    pts = [(s0.x, s0.y)] + [scenario.point_of(g) if isinstance(g, str) else g for g in targets]
    # a small constant keeps zero-length legs at a positive duration
    weights = [math.dist(a, b) + 0.1 for a, b in zip(pts, pts[1:])]
    chargers = set(scenario.labels("charger"))
    n_dwell = sum(1 for g in targets if g in chargers)
    moving = total - DWELL_SECONDS * n_dwell
    scale = moving / math.fsum(weights)
    out_targets, out_times, t = [], [], 0.0
    for g, w in zip(targets, weights):
        t += w * scale
        out_targets.append(g)
        out_times.append(round(t, 3))
        if g in chargers:
            t += DWELL_SECONDS
            out_targets.append(g)
            out_times.append(round(t, 3))
    return out_targets, out_times


class OracleBackend(PlannerBackend):
    """Ignores the prompt text; answers from stored plans or the heuristic."""

    name = "oracle"

    def __init__(self, plan_file=PLAN_FILE, **kwargs):
        super().__init__(**kwargs)
        self.plan_file = Path(plan_file)

    def subgoals_for(self, req: PlanRequest) -> list:
        stored = _stored_plans(str(self.plan_file)).get(req.task_id)
        if stored is not None:
            return [g if isinstance(g, str) else tuple(g) for g in stored]
        return heuristic_subgoals(req.formula, req.scenario)

    def generate(self, req: PlanRequest, prompt) -> str:
        if req.stage == "task":
            plan = self.subgoals_for(req)
            return formats.format_subgoals(plan) if plan else "no plan found\n"
        if req.stage == "time":
            targets, times = allocate_times(list(req.subgoals), req.scenario, req.formula)
            return formats.format_waypoints(targets, times)
        return formats.format_builtin()
