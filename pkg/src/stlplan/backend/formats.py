"""Line grammars for planner output, and their printers.

Subgoals::

    GOTO Kitchen
    GOTO (3.5, 2)

Timed waypoints::

    Kitchen @ 12.5
    (3.5, 2) @ 14

Controller: either ``BUILTIN k_v=2 k_omega=4 capture=0.1`` or a fenced
``python`` program speaking the controller process protocol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..signal import SubgoalSequence, TimedWaypoints
from .errors import UnparseableOutput

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TARGET = rf"(?:(?P<label>[A-Za-z_][A-Za-z0-9_]*)|\(\s*(?P<x>{_NUM})\s*,\s*(?P<y>{_NUM})\s*\))"
_GOTO = re.compile(rf"^GOTO\s+{_TARGET}$")
_TIMED = re.compile(rf"^{_TARGET}\s*@\s*(?P<t>{_NUM})$")
_FENCE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.S)
_GAIN_KEYS = {"k_v": "k_v", "k_omega": "k_omega", "speed_cap": "speed_cap"}


@dataclass(frozen=True)
class BuiltinSpec:
    gains: dict = field(default_factory=dict)
    capture: float = 0.1


def strip_fences(text: str) -> str:
    m = _FENCE.search(text)
    return m.group(1) if m else text


def _lines(text: str) -> list[tuple[int, str]]:
    return [(n, ln.strip()) for n, ln in enumerate(strip_fences(text).splitlines(), 1) if ln.strip()]


def _target(m: re.Match):
    if m.group("label"):
        return m.group("label")
    return (float(m.group("x")), float(m.group("y")))


def parse_subgoals(text: str) -> SubgoalSequence:
    targets = []
    for n, line in _lines(text):
        m = _GOTO.match(line)
        if not m:
            raise UnparseableOutput(text, f"line {n}: expected 'GOTO <label>' or 'GOTO (x, y)', got {line!r}")
        targets.append(_target(m))
    if not targets:
        raise UnparseableOutput(text, "no subgoals in output")
    return SubgoalSequence(targets, raw=text)


def parse_waypoints(text: str) -> TimedWaypoints:
    targets, times = [], []
    for n, line in _lines(text):
        m = _TIMED.match(line)
        if not m:
            raise UnparseableOutput(text, f"line {n}: expected '<label> @ <t>' or '(x, y) @ <t>', got {line!r}")
        targets.append(_target(m))
        times.append(float(m.group("t")))
    if not targets:
        raise UnparseableOutput(text, "no waypoints in output")
    try:
        return TimedWaypoints(targets, times, raw=text)
    except ValueError as exc:
        raise UnparseableOutput(text, str(exc)) from None


def parse_controller(text: str):
    """``BuiltinSpec`` for a BUILTIN line, else the program source (str)."""
    fenced = _FENCE.search(text)
    if fenced:
        source = fenced.group(1)
        if not source.strip():
            raise UnparseableOutput(text, "empty controller program")
        return source
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1 or not lines[0].startswith("BUILTIN"):
        raise UnparseableOutput(text, "expected a 'BUILTIN key=value ...' line or a fenced python program")
    gains, capture = {}, 0.1
    for item in lines[0].split()[1:]:
        key, sep, value = item.partition("=")
        try:
            number = float(value)
        except ValueError:
            number = None
        if not sep or number is None or not number > 0:
            raise UnparseableOutput(text, f"bad BUILTIN parameter {item!r}")
        if key == "capture":
            capture = number
        elif key in _GAIN_KEYS:
            gains[_GAIN_KEYS[key]] = number
        else:
            raise UnparseableOutput(text, f"unknown BUILTIN parameter {key!r}")
    return BuiltinSpec(gains, capture)


def _fmt_target(g) -> str:
    return g if isinstance(g, str) else f"({g[0]!r}, {g[1]!r})"


def format_subgoals(targets) -> str:
    return "".join(f"GOTO {_fmt_target(g)}\n" for g in targets)


def format_waypoints(targets, times) -> str:
    return "".join(f"{_fmt_target(g)} @ {float(t)!r}\n" for g, t in zip(targets, times))


def format_builtin(k_v: float = 2.0, k_omega: float = 4.0, capture: float = 0.1, speed_cap: float = 1.0) -> str:
    line = f"BUILTIN k_v={k_v!r} k_omega={k_omega!r} capture={capture!r}"
    if speed_cap != 1.0:
        line += f" speed_cap={speed_cap!r}"
    return line + "\n"
