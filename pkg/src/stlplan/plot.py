"""Deterministic SVG rendering of a scenario, waypoints and trajectory."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .signal import TimedTrajectory, format_trajectory
from .world import Scenario

COLORS = {
    "room": "#f2efe6",
    "obstacle": "#555555",
    "wall": "#222222",
    "key-pickup": "#f5c542",
    "door": "#8fbf6a",
    "goal": "#e0605e",
    "charger": "#5aa0e0",
}
SCALE = 40.0
MARGIN = 20.0


def _n(v: float) -> str:
    return f"{v:.3f}"


def render_svg(scenario: Scenario, trajectory: TimedTrajectory, waypoints=None) -> str:
    xs = [v for r in scenario.regions.values() for v in (r.x0, r.x1)] + [float(trajectory.x.min()), float(trajectory.x.max())]
    ys = [v for r in scenario.regions.values() for v in (r.y0, r.y1)] + [float(trajectory.y.min()), float(trajectory.y.max())]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    width = (x1 - x0) * SCALE + 2 * MARGIN
    height = (y1 - y0) * SCALE + 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) * SCALE

    def py(y):
        # SVG y grows downwards
        return MARGIN + (y1 - y) * SCALE

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}">',
        f"<title>{escape(scenario.name)}</title>",
        '<g id="regions">',
    ]
    # rooms first so that everything else is drawn on top of them
    ordered = sorted(scenario.regions.values(), key=lambda r: (r.kind != "room",))
    for r in ordered:
        out.append(
            f'<rect class="region {r.kind}" data-label="{escape(r.label)}" x="{_n(px(r.x0))}" y="{_n(py(r.y1))}" '
            f'width="{_n((r.x1 - r.x0) * SCALE)}" height="{_n((r.y1 - r.y0) * SCALE)}" '
            f'fill="{COLORS[r.kind]}" stroke="#000000" stroke-width="0.5"/>'
        )
        cx, cy = r.center
        out.append(
            f'<text x="{_n(px(cx))}" y="{_n(py(cy))}" font-size="10" text-anchor="middle">{escape(r.label)}</text>'
        )
    out.append("</g>")
    if waypoints is not None:
        out.append('<g id="waypoints">')
        for (wx, wy), t in zip(waypoints.points(scenario), waypoints.times):
            out.append(
                f'<circle class="waypoint" cx="{_n(px(wx))}" cy="{_n(py(wy))}" r="4" fill="#ffffff" '
                f'stroke="#1f3a93" stroke-width="1.5"><title>t={t:g}</title></circle>'
            )
        out.append("</g>")
    points = " ".join(f"{_n(px(x))},{_n(py(y))}" for x, y in zip(trajectory.x, trajectory.y))
    out.append(f'<polyline id="trajectory" points="{points}" fill="none" stroke="#1f3a93" stroke-width="2"/>')
    s0 = scenario.initial_state
    out.append(f'<circle id="start" cx="{_n(px(s0.x))}" cy="{_n(py(s0.y))}" r="5" fill="#1f3a93"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_plot(artifacts, scenario: Scenario, path) -> tuple[Path, Path]:
    """Write ``path`` (SVG) and the trajectory text next to it (``.traj``)."""
    traj = getattr(artifacts, "trajectory", None)
    if traj is None or len(traj) == 0:
        raise ValueError("artifacts carry no trajectory to plot")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_svg(scenario, traj, getattr(artifacts, "waypoints", None)), encoding="utf-8")
    traj_path = path.with_suffix(".traj")
    traj_path.write_text(format_trajectory(traj), encoding="utf-8")
    return path, traj_path
