"""Quantitative (robustness) semantics over sampled trajectories.

The engine computes the robustness signal of every subformula at every sample
in one bottom-up pass.  A temporal window that is empty after clipping to the
trajectory makes the value at that sample undefined (NaN internally); asking
for an undefined value raises :class:`EmptyWindowError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ast import (
    UNBOUNDED,
    And,
    Finally,
    Formula,
    Globally,
    Iff,
    Implies,
    Interval,
    Not,
    Or,
    Predicate,
    Until,
    walk,
)

# robustness assigned to a true/false boolean channel
CHANNEL_MARGIN = 1.0
# tolerance when matching timestamps to window bounds
TIME_EPS = 1e-9


class UnboundPredicateError(KeyError):
    pass


class EmptyWindowError(ValueError):
    pass


class NonMonotoneTimeError(ValueError):
    pass


def untimed(f: Formula) -> Formula:
    """Replace every temporal interval with ``[0, inf)``."""
    if isinstance(f, Predicate):
        return f
    if isinstance(f, Not):
        return Not(untimed(f.arg))
    if isinstance(f, Finally):
        return Finally(UNBOUNDED, untimed(f.arg))
    if isinstance(f, Globally):
        return Globally(UNBOUNDED, untimed(f.arg))
    if isinstance(f, Until):
        return Until(UNBOUNDED, untimed(f.left), untimed(f.right))
    return type(f)(untimed(f.left), untimed(f.right))


def scale_time(f: Formula, factor: float) -> Formula:
    """Multiply every interval bound by ``factor``."""
    if isinstance(f, Predicate):
        return f
    if isinstance(f, Not):
        return Not(scale_time(f.arg, factor))
    if isinstance(f, (Finally, Globally)):
        iv = Interval(f.interval.lo * factor, f.interval.hi * factor)
        return type(f)(iv, scale_time(f.arg, factor))
    if isinstance(f, Until):
        iv = Interval(f.interval.lo * factor, f.interval.hi * factor)
        return Until(iv, scale_time(f.left, factor), scale_time(f.right, factor))
    return type(f)(scale_time(f.left, factor), scale_time(f.right, factor))


def horizon(f: Formula) -> float:
    """Nesting-sum of interval upper bounds (``math.inf`` if any is unbounded)."""
    if isinstance(f, Predicate):
        return 0.0
    if isinstance(f, Not):
        return horizon(f.arg)
    if isinstance(f, (Finally, Globally)):
        return f.interval.hi + horizon(f.arg)
    if isinstance(f, Until):
        return f.interval.hi + max(horizon(f.left), horizon(f.right))
    return max(horizon(f.left), horizon(f.right))


def bind(f: Formula, scenario) -> Formula:
    """Check that every predicate resolves against ``scenario``; returns ``f``."""
    for p in (n for n in walk(f) if isinstance(n, Predicate)):
        if p.kind == "in" and p.name not in scenario.regions:
            raise UnboundPredicateError(f"in({p.name}): no region {p.name!r} in scenario {scenario.name!r}")
        if p.kind == "holds" and p.name not in scenario.channel_names:
            raise UnboundPredicateError(
                f"holds({p.name}): scenario {scenario.name!r} derives no channel {p.name!r}"
            )
    return f


def window_bounds(times: np.ndarray, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample [start, stop) index range of samples with t_j in [t_i+lo, t_i+hi]."""
    start = np.searchsorted(times, times + lo - TIME_EPS, side="left")
    stop = np.searchsorted(times, times + hi + TIME_EPS, side="right")
    return start, stop


def range_reduce(sig: np.ndarray, start: np.ndarray, stop: np.ndarray, op) -> np.ndarray:
    """``op``-reduce ``sig[start[i]:stop[i]]`` for every i via a sparse table.

    ``op`` is ``np.maximum`` or ``np.minimum``; both propagate NaN, so a
    window touching an undefined value is undefined.  Empty windows give NaN.
    """
    n = len(sig)
    out = np.full(n, np.nan)
    length = stop - start
    ok = length > 0
    if not ok.any():
        return out
    levels = [sig]
    while (1 << len(levels)) <= length.max():
        prev, half = levels[-1], 1 << (len(levels) - 1)
        levels.append(op(prev[:-half], prev[half:]))
    k = np.zeros(n, dtype=int)
    k[ok] = np.floor(np.log2(length[ok])).astype(int)
    for level in np.unique(k[ok]):
        sel = ok & (k == level)
        table, span = levels[level], 1 << level
        out[sel] = op(table[start[sel]], table[stop[sel] - span])
    return out


@dataclass
class _Evaluator:
    traj: object
    scenario: object
    cache: dict = field(default_factory=dict)

    def signal(self, f: Formula) -> np.ndarray:
        out = self.cache.get(f)
        if out is None:
            out = self._compute(f)
            self.cache[f] = out
        return out

    def _compute(self, f: Formula) -> np.ndarray:
        if isinstance(f, Predicate):
            return predicate_signal(f, self.traj, self.scenario)
        if isinstance(f, Not):
            return -self.signal(f.arg)
        if isinstance(f, And):
            return np.minimum(self.signal(f.left), self.signal(f.right))
        if isinstance(f, Or):
            return np.maximum(self.signal(f.left), self.signal(f.right))
        if isinstance(f, Implies):
            return np.maximum(-self.signal(f.left), self.signal(f.right))
        if isinstance(f, Iff):
            a, b = self.signal(f.left), self.signal(f.right)
            return np.minimum(np.maximum(-a, b), np.maximum(-b, a))
        times = self.traj.t
        start, stop = window_bounds(times, f.interval.lo, f.interval.hi)
        out = np.full(len(times), np.nan)
        if isinstance(f, (Finally, Globally)):
            op = np.maximum if isinstance(f, Finally) else np.minimum
            return range_reduce(self.signal(f.arg), start, stop, op)
        # Until: max over t' in window of min(rho(g, t'), min over [t, t'] of rho(f))
        lhs, rhs = self.signal(f.left), self.signal(f.right)
        for i, (a, b) in enumerate(zip(start, stop)):
            if b > a:
                prefix = np.minimum.accumulate(lhs[i:b])
                out[i] = np.max(np.minimum(rhs[a:b], prefix[a - i:]))
        return out


def predicate_signal(p: Predicate, traj, scenario) -> np.ndarray:
    if p.kind == "in":
        try:
            region = scenario.regions[p.name]
        except KeyError:
            raise UnboundPredicateError(f"no region {p.name!r} in scenario {scenario.name!r}") from None
        return region.signed_distance(traj.x, traj.y)
    channels = traj.channels
    if p.name not in channels:
        from ..signal import derive_channels

        channels = derive_channels(traj, scenario).channels
        if p.name not in channels:
            raise UnboundPredicateError(f"no channel {p.name!r} for scenario {scenario.name!r}")
    return np.where(channels[p.name], CHANNEL_MARGIN, -CHANNEL_MARGIN)


def _check_times(times: np.ndarray) -> None:
    if len(times) == 0:
        raise ValueError("empty trajectory")
    if np.any(np.diff(times) <= 0):
        raise NonMonotoneTimeError("trajectory timestamps must be strictly increasing")


def _sample_index(times: np.ndarray, t) -> int:
    if t is None:
        return 0
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > TIME_EPS:
        raise ValueError(f"t={t} is not a sample timestamp; resample the trajectory first")
    return i


def robustness_signal(f: Formula, traj, scenario) -> np.ndarray:
    """Robustness of ``f`` at every sample (NaN where a window is empty)."""
    _check_times(traj.t)
    bind(f, scenario)
    return _Evaluator(traj, scenario).signal(f).copy()


def robustness(f: Formula, traj, scenario, t=None) -> float:
    """Robustness of ``f`` on ``traj`` at sample time ``t`` (default: first sample)."""
    _check_times(traj.t)
    bind(f, scenario)
    i = _sample_index(traj.t, t)
    value = _Evaluator(traj, scenario).signal(f)[i]
    if math.isnan(value):
        raise EmptyWindowError(
            f"a temporal window of {f} is empty at t={traj.t[i]:g}: trajectory spans "
            f"[{traj.t[0]:g}, {traj.t[-1]:g}] s, formula horizon is {horizon(f):g} s"
        )
    return float(value)


def explain(f: Formula, traj, scenario, t=None) -> list[tuple[str, float, float]]:
    """Critical path from ``f`` down to the predicate that determines its value.

    Each step is ``(subformula text, time, robustness)``.  For a violated
    formula the last step names the offending predicate and instant.
    """
    _check_times(traj.t)
    bind(f, scenario)
    ev = _Evaluator(traj, scenario)
    times = traj.t
    i = _sample_index(times, t)
    path = []
    node = f
    while True:
        path.append((str(node), float(times[i]), float(ev.signal(node)[i])))
        if isinstance(node, Predicate):
            break
        if isinstance(node, Not):
            node = node.arg
        elif isinstance(node, (And, Or)):
            a, b = ev.signal(node.left)[i], ev.signal(node.right)[i]
            pick_left = (a <= b) if isinstance(node, And) else (a >= b)
            node = node.left if pick_left else node.right
        elif isinstance(node, Implies):
            a, b = ev.signal(node.left)[i], ev.signal(node.right)[i]
            node = node.left if -a >= b else node.right
        elif isinstance(node, Iff):
            a, b = ev.signal(node.left)[i], ev.signal(node.right)[i]
            if max(-a, b) <= max(-b, a):
                node = node.left if -a >= b else node.right
            else:
                node = node.right if -b >= a else node.left
        else:
            start, stop = window_bounds(times, node.interval.lo, node.interval.hi)
            a, b = start[i], stop[i]
            if b <= a:
                break
            if isinstance(node, (Finally, Globally)):
                sig = ev.signal(node.arg)[a:b]
                j = a + int(np.argmax(sig) if isinstance(node, Finally) else np.argmin(sig))
                node, i = node.arg, j
            else:
                lhs, rhs = ev.signal(node.left), ev.signal(node.right)
                prefix = np.minimum.accumulate(lhs[i:b])
                cand = np.minimum(rhs[a:b], prefix[a - i:])
                j = a + int(np.argmax(cand))
                if rhs[j] <= prefix[j - i]:
                    node, i = node.right, j
                else:
                    node, i = node.left, i + int(np.argmin(lhs[i:j + 1]))
    return path
