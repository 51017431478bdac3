"""Fixed-step unicycle simulation driven by a controller through timed waypoints."""

from __future__ import annotations

import math

from ..signal import TimedTrajectory, TimedWaypoints
from ..world import Scenario, wrap_angle
from .controller import ControllerError, ControllerHandle

DEFAULT_DT = 0.05
_EPS = 1e-9


class WaypointSequencer:
    """Tracks which waypoint is the current target.

    A waypoint is passed once the robot comes within the capture radius or
    its timestamp has passed.  A waypoint at the same spot as its
    predecessor is a dwell and is only passed when its timestamp arrives.
    """

    def __init__(self, points, times, capture_radius: float):
        self.points = list(points)
        self.times = list(times)
        self.radius = capture_radius
        self.index = 0
        self.hold = [i > 0 and self.points[i] == self.points[i - 1] for i in range(len(self.points))]

    def update(self, x: float, y: float, t: float) -> tuple[float, float, float]:
        last = len(self.points) - 1
        while self.index < last:
            k = self.index
            px, py = self.points[k]
            if t >= self.times[k] - _EPS:
                self.index += 1
            elif not self.hold[k] and math.hypot(px - x, py - y) < self.radius:
                self.index += 1
            else:
                break
        px, py = self.points[self.index]
        return px, py, self.times[self.index]


def simulate(
    controller: ControllerHandle,
    waypoints: TimedWaypoints,
    scenario: Scenario,
    dt: float = DEFAULT_DT,
) -> TimedTrajectory:
    """Integrate unicycle kinematics from the scenario's start pose.

    Commands are clamped to ``[0, v_max] x [-omega_max, omega_max]`` of the
    scenario; the run lasts until the final waypoint timestamp and every
    step is recorded.
    """
    ts, xs, ys, _ = simulate_states(controller, waypoints, scenario, dt)
    return TimedTrajectory(ts, xs, ys)


def simulate_states(controller, waypoints, scenario, dt=DEFAULT_DT):
    """Like :func:`simulate` but returns ``(t, x, y, theta)`` lists."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t_end = waypoints.times[-1]
    if not t_end > 0:
        raise ValueError("waypoints must end at a positive time")
    steps = math.ceil(t_end / dt - _EPS)
    seq = WaypointSequencer(waypoints.points(scenario), waypoints.times, controller.capture_radius)
    v_max, w_max = scenario.v_max, scenario.omega_max

    s0 = scenario.initial_state
    x, y, theta = float(s0.x), float(s0.y), wrap_angle(float(s0.theta))
    ts, xs, ys, thetas = [0.0], [x], [y], [theta]
    with controller.open(v_max, w_max) as ctl:
        for k in range(steps):
            t = k * dt
            target = seq.update(x, y, t)
            v, w = ctl.command((x, y, theta), target, t)
            if not (math.isfinite(v) and math.isfinite(w)):
                raise ControllerError(f"non-finite command ({v}, {w}) at t={t:g}")
            v = min(max(v, 0.0), v_max)
            w = min(max(w, -w_max), w_max)
            x += v * math.cos(theta) * dt
            y += v * math.sin(theta) * dt
            theta = wrap_angle(theta + w * dt)
            ts.append((k + 1) * dt)
            xs.append(x)
            ys.append(y)
            thetas.append(theta)
    return ts, xs, ys, thetas
