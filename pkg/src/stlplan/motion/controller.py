"""Controller handles, the built-in tracking law, and external controller processes.

External controllers speak a line protocol on stdin/stdout::

    -> HELLO
    <- READY
    -> STATE x y theta t
    -> TARGET x y t_target
    <- CMD v omega

Every reply must arrive within ``STEP_TIMEOUT`` seconds.
"""

from __future__ import annotations

import math
import os
import selectors
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..world import wrap_angle

STEP_TIMEOUT = 1.0
CAPTURE_RADIUS = 0.1


class ControllerError(RuntimeError):
    """The controller produced an unusable command."""


class ProtocolError(ControllerError):
    """An external controller broke the line protocol (bad reply, crash, timeout)."""


@dataclass(frozen=True)
class BuiltinGains:
    k_v: float = 2.0
    k_omega: float = 4.0
    # fraction of v_max the law may command; 1.0 for a healthy controller
    speed_cap: float = 1.0


@dataclass(frozen=True)
class ControllerHandle:
    kind: str  # "builtin" or "external"
    v_max: float
    omega_max: float
    gains: Optional[BuiltinGains] = None
    program: Optional[Path] = None
    capture_radius: float = CAPTURE_RADIUS
    source: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("builtin", "external"):
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if not (self.v_max > 0 and self.omega_max > 0):
            raise ValueError("v_max and omega_max must be positive")
        if self.kind == "builtin" and self.gains is None:
            object.__setattr__(self, "gains", BuiltinGains())
        if self.kind == "external" and self.program is None:
            raise ValueError("external controller needs a program path")

    def open(self, v_max: Optional[float] = None, omega_max: Optional[float] = None) -> "Controller":
        """Start a controller instance.

        The built-in law saturates at the limits of the robot being simulated
        when given, else at the handle's own limits.
        """
        if self.kind == "builtin":
            return BuiltinController(self.gains, v_max or self.v_max, omega_max or self.omega_max)
        return ExternalController(Path(self.program))


def builtin_controller(v_max: float, omega_max: float, **gains) -> ControllerHandle:
    if not (v_max > 0 and omega_max > 0):
        raise ValueError(f"limits must be positive, got v_max={v_max}, omega_max={omega_max}")
    return ControllerHandle("builtin", v_max, omega_max, gains=BuiltinGains(**gains))


def external_controller(program, v_max: float, omega_max: float, source: str = "") -> ControllerHandle:
    if not (v_max > 0 and omega_max > 0):
        raise ValueError(f"limits must be positive, got v_max={v_max}, omega_max={omega_max}")
    return ControllerHandle("external", v_max, omega_max, program=Path(program), source=source)


def tracking_command(x, y, theta, tx, ty, gains: BuiltinGains, v_max, omega_max) -> tuple[float, float]:
    """Heading-error tracking law toward ``(tx, ty)``.

    Turns at ``k_omega * e`` and drives at ``k_v * distance * max(0, cos e)``,
    both saturated, so a target behind the robot yields a turn in place.
    """
    dx, dy = tx - x, ty - y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return 0.0, 0.0
    e = wrap_angle(math.atan2(dy, dx) - theta)
    omega = min(max(gains.k_omega * e, -omega_max), omega_max)
    v = min(max(gains.k_v * dist * max(0.0, math.cos(e)), 0.0), v_max * gains.speed_cap)
    return v, omega


class Controller:
    def command(self, state, target, t: float) -> tuple[float, float]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BuiltinController(Controller):
    def __init__(self, gains: BuiltinGains, v_max: float, omega_max: float):
        self.gains = gains
        self.v_max = v_max
        self.omega_max = omega_max

    def command(self, state, target, t):
        (tx, ty, _), (x, y, theta) = target, state
        return tracking_command(x, y, theta, tx, ty, self.gains, self.v_max, self.omega_max)


def program_command(program: Path) -> list[str]:
    if program.suffix == ".py":
        return [sys.executable, "-u", str(program)]
    return [str(program)]


def check_syntax(program: Path) -> None:
    """Static check of a Python controller; raises :class:`ProtocolError`."""
    if not program.exists():
        raise ProtocolError(f"controller program {program} does not exist")
    if program.suffix == ".py":
        try:
            compile(program.read_text(encoding="utf-8"), str(program), "exec")
        except SyntaxError as exc:
            raise ProtocolError(f"syntax error in {program.name} line {exc.lineno}: {exc.msg}") from None


class ExternalController(Controller):
    """A running controller process; the handshake runs on construction."""

    def __init__(self, program: Path, timeout: float = STEP_TIMEOUT):
        check_syntax(program)
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                program_command(program),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                bufsize=0,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot start {program}: {exc}") from None
        self._buf = b""
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)
        try:
            self._send("HELLO")
            reply = self._readline()
            if reply != "READY":
                raise ProtocolError(f"handshake: expected 'READY', got {reply!r}")
        except BaseException:
            self.close()
            raise

    def _send(self, text: str) -> None:
        try:
            self.proc.stdin.write((text + "\n").encode())
        except (BrokenPipeError, OSError):
            raise ProtocolError(f"controller exited (code {self.proc.poll()})") from None

    def _readline(self) -> str:
        deadline = time.monotonic() + self.timeout
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0 or not self._sel.select(remaining):
                raise ProtocolError(f"no reply within {self.timeout:g} s")
            chunk = os.read(self.proc.stdout.fileno(), 4096)
            if not chunk:
                raise ProtocolError(f"controller exited (code {self.proc.poll()})")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode(errors="replace").strip()

    def command(self, state, target, t):
        x, y, theta = map(float, state)
        tx, ty, tt = map(float, target)
        t = float(t)
        self._send(f"STATE {x!r} {y!r} {theta!r} {t!r}\nTARGET {tx!r} {ty!r} {tt!r}")
        reply = self._readline()
        parts = reply.split()
        if len(parts) != 3 or parts[0] != "CMD":
            raise ProtocolError(f"expected 'CMD v omega', got {reply!r}")
        try:
            return float(parts[1]), float(parts[2])
        except ValueError:
            raise ProtocolError(f"non-numeric command {reply!r}") from None

    def close(self) -> None:
        proc = getattr(self, "proc", None)
        if proc is None:
            return
        self._sel.close()
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        proc.stdout.close()
        self.proc = None


def write_program(source: str, directory, name: str = "controller.py") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(source, encoding="utf-8")
    os.chmod(path, 0o755)
    return path
