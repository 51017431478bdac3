import math
import random
import textwrap

import numpy as np
import pytest

from stlplan.motion import (
    BuiltinGains,
    CaseLibrary,
    ControllerHandle,
    ExternalController,
    ProtocolError,
    builtin_controller,
    check_loadable,
    evaluate_case,
    external_controller,
    generate_cases,
    load_library,
    motional_verify,
    simulate,
    simulate_states,
    tracking_command,
    write_program,
)
from stlplan.motion import verify as verify_mod
from stlplan.motion.controller import Controller
from stlplan.signal import TimedWaypoints
from stlplan.world import builtin_scenario, scenario_from_dict

OPEN = scenario_from_dict(
    {
        "name": "open",
        "v_max": 1.0,
        "omega_max": 2.0,
        "initial_state": {"x": 0.0, "y": 0.0, "theta": 0.0},
        "regions": [{"label": "Goal", "kind": "goal", "x0": 4.0, "y0": -0.5, "x1": 5.0, "y1": 0.5}],
    }
)
LIBRARY = load_library()

TRACKER = textwrap.dedent(
    """\
    import math, sys

    def wrap(a):
        return math.atan2(math.sin(a), math.cos(a))

    V_MAX, W_MAX = {v_max!r}, {w_max!r}
    for line in sys.stdin:
        parts = line.split()
        if parts[0] == "HELLO":
            print("READY", flush=True)
        elif parts[0] == "STATE":
            x, y, th, t = map(float, parts[1:])
        elif parts[0] == "TARGET":
            tx, ty, _ = map(float, parts[1:])
            dx, dy = tx - x, ty - y
            d = math.hypot(dx, dy)
            if d == 0.0:
                print("CMD 0.0 0.0", flush=True)
                continue
            e = wrap(math.atan2(dy, dx) - th)
            w = min(max(4.0 * e, -W_MAX), W_MAX)
            v = min(max(2.0 * d * max(0.0, math.cos(e)), 0.0), V_MAX)
            print("CMD %r %r" % (v, w), flush=True)
    """
)


class _Fixed(Controller):
    def __init__(self, fn):
        self.fn = fn

    def command(self, state, target, t):
        return self.fn(state, target, t)


class FnHandle:
    """Duck-typed controller handle around a plain command function."""

    capture_radius = 0.1

    def __init__(self, fn):
        self.fn = fn

    def open(self, v_max=None, omega_max=None):
        return _Fixed(self.fn)


def _program(tmp_path, source, name="ctl.py"):
    return write_program(source, tmp_path, name)


# -- tracking law and simulator -----------------------------------------------


def test_tracking_command_examples():
    g = BuiltinGains()
    assert tracking_command(1, 1, 0.3, 1, 1, g, 1.0, 2.0) == (0.0, 0.0)
    v, w = tracking_command(0, 0, 0, -3, 0, g, 1.0, 2.0)
    assert v == 0.0 and abs(w) == 2.0
    v, w = tracking_command(0, 0, 0, 5, 0, g, 1.0, 2.0)
    assert (v, w) == (1.0, 0.0)
    v, _ = tracking_command(0, 0, 0, 5, 0, BuiltinGains(speed_cap=0.1), 1.0, 2.0)
    assert v == pytest.approx(0.1)


def test_zero_velocity_controller_stays_put():
    ts, xs, ys, ths = simulate_states(FnHandle(lambda s, g, t: (0.0, 0.0)), TimedWaypoints(["Goal"], [2.0]), OPEN)
    assert set(xs) == {0.0} and set(ys) == {0.0} and set(ths) == {0.0}
    assert len(ts) == 41 and ts[-1] == 2.0


def test_single_waypoint_ahead_is_reached():
    traj = simulate(builtin_controller(1.0, 2.0), TimedWaypoints([(4.5, 0.0)], [8.0]), OPEN)
    assert math.hypot(traj.x[-1] - 4.5, traj.y[-1]) <= 0.05


def test_commands_are_clamped():
    ts, xs, ys, ths = simulate_states(FnHandle(lambda s, g, t: (50.0, -50.0)), TimedWaypoints(["Goal"], [1.0]), OPEN)
    steps = np.hypot(np.diff(xs), np.diff(ys))
    assert np.all(steps <= 1.0 * 0.05 + 1e-12)
    assert ths[1] == pytest.approx(-0.1)
    ts, xs, *_ = simulate_states(FnHandle(lambda s, g, t: (-3.0, 0.0)), TimedWaypoints(["Goal"], [1.0]), OPEN)
    assert set(xs) == {0.0}


def test_non_finite_command_is_an_error():
    from stlplan.motion import ControllerError

    with pytest.raises(ControllerError):
        simulate(FnHandle(lambda s, g, t: (math.nan, 0.0)), TimedWaypoints(["Goal"], [1.0]), OPEN)


def test_simulation_is_deterministic():
    wp = TimedWaypoints([(2.0, 2.0), (4.5, 0.0)], [4.0, 9.0])
    a = simulate(builtin_controller(1.0, 2.0), wp, OPEN)
    b = simulate(builtin_controller(1.0, 2.0), wp, OPEN)
    assert a == b


def test_dwell_waypoint_holds_until_its_time():
    sc = builtin_scenario("navigation")
    wp = TimedWaypoints(["C1", "C1", "G1"], [5.0, 9.0, 20.0])
    handle = builtin_controller(sc.v_max, sc.omega_max)
    ts, xs, ys, _ = simulate_states(handle, wp, sc)
    cx, cy = sc.point_of("C1")
    i5, i9 = round(5.0 / 0.05), round(9.0 / 0.05)
    assert all(math.hypot(x - cx, y - cy) < 0.2 for x, y in zip(xs[i5:i9], ys[i5:i9]))


# -- external controllers -----------------------------------------------------


def test_external_controller_matches_builtin_bit_for_bit(tmp_path):
    case = LIBRARY.cases[LIBRARY.ids().index("nav_slalom")]
    sc = case.scenario
    prog = _program(tmp_path, TRACKER.format(v_max=sc.v_max, w_max=sc.omega_max))
    handle = external_controller(prog, sc.v_max, sc.omega_max)
    assert check_loadable(handle).passed
    traj = simulate(handle, case.waypoints, sc)
    assert traj == case.reference


def test_bad_handshake(tmp_path):
    prog = _program(tmp_path, "import sys\nsys.stdin.readline()\nprint('HELLO BACK', flush=True)\n")
    with pytest.raises(ProtocolError, match="handshake"):
        ExternalController(prog)
    report = check_loadable(external_controller(prog, 1, 1))
    assert not report.passed and report.stage == "motional-syntax"


def test_syntax_error_is_caught_before_running(tmp_path):
    prog = _program(tmp_path, "def broken(:\n")
    with pytest.raises(ProtocolError, match="syntax error"):
        ExternalController(prog)


def test_timeout(tmp_path):
    prog = _program(
        tmp_path,
        "import sys, time\nsys.stdin.readline()\nprint('READY', flush=True)\nsys.stdin.readline()\ntime.sleep(5)\n",
    )
    ctl = ExternalController(prog, timeout=0.2)
    try:
        with pytest.raises(ProtocolError, match="no reply"):
            ctl.command((0, 0, 0), (1, 1, 1), 0.0)
    finally:
        ctl.close()


def test_crash_mid_run(tmp_path):
    prog = _program(tmp_path, "import sys\nsys.stdin.readline()\nprint('READY', flush=True)\nsys.exit(3)\n")
    ctl = ExternalController(prog)
    try:
        with pytest.raises(ProtocolError, match="exited"):
            for _ in range(3):
                ctl.command((0, 0, 0), (1, 1, 1), 0.0)
    finally:
        ctl.close()


def test_malformed_command(tmp_path):
    prog = _program(tmp_path, "import sys\nsys.stdin.readline()\nprint('READY', flush=True)\nfor l in sys.stdin:\n    print('GO', flush=True)\n")
    ctl = ExternalController(prog)
    try:
        with pytest.raises(ProtocolError, match="CMD"):
            ctl.command((0, 0, 0), (1, 1, 1), 0.0)
    finally:
        ctl.close()


# -- motional verification ----------------------------------------------------


def test_library_is_large_and_sound():
    assert len(LIBRARY) >= 12
    for case in LIBRARY:
        sc = case.scenario
        traj = simulate(builtin_controller(sc.v_max, sc.omega_max), case.waypoints, sc)
        assert traj.x.tobytes() == case.reference.x.tobytes()
        assert traj.y.tobytes() == case.reference.y.tobytes()
        assert evaluate_case(case, traj) >= 0


def test_builtin_passes_and_crippled_fails():
    ok = motional_verify(builtin_controller(1.0, 2.0), LIBRARY)
    assert ok.passed and ok.rho >= 0 and ok.stage == "motional-functional"
    bad = motional_verify(ControllerHandle("builtin", 1.0, 2.0, BuiltinGains(speed_cap=0.1)), LIBRARY)
    assert not bad.passed and bad.rho < 0
    assert bad.diagnostic.startswith("case ")


def test_syntax_layer_runs_before_simulation(tmp_path, monkeypatch):
    calls = []
    monkeypatch.setattr(verify_mod, "simulate", lambda *a, **k: calls.append(a))
    prog = _program(tmp_path, "def broken(:\n")
    report = motional_verify(external_controller(prog, 1, 1), LIBRARY)
    assert not report.passed and report.stage == "motional-syntax"
    assert calls == []


def test_protocol_failure_during_cases_is_a_syntax_failure(tmp_path):
    prog = _program(tmp_path, "import sys\nsys.stdin.readline()\nprint('READY', flush=True)\nfor l in sys.stdin:\n    pass\n")
    handle = external_controller(prog, 1, 1)
    # the controller never answers a command, so the first case times out
    report = motional_verify(handle, CaseLibrary(LIBRARY.cases[:1]))
    assert not report.passed and report.stage == "motional-syntax"


def test_empty_library_is_rejected():
    with pytest.raises(ValueError):
        motional_verify(builtin_controller(1, 1), CaseLibrary(()))


# -- case generation ----------------------------------------------------------


def _base():
    return LIBRARY.cases[LIBRARY.ids().index("household_dash")]


def test_identity_sweep_returns_the_base():
    base = _base()
    lib = generate_cases(base, deadline_scales=(1.0,), v_max_scales=(1.0,))
    assert lib.ids() == [base.id]
    assert lib.cases[0].reference == base.reference


def test_impossible_deadline_is_discarded():
    base = _base()
    lib = generate_cases(base, deadline_scales=(0.1, 1.0), v_max_scales=(1.0,))
    assert lib.ids() == [base.id]
    with pytest.raises(ValueError):
        generate_cases(base, deadline_scales=(0.1,), v_max_scales=(1.0,))


def test_random_steps_stay_within_limits():
    rng = random.Random(7)
    fn = lambda s, g, t: (rng.uniform(-2, 3), rng.uniform(-5, 5))  # noqa: E731
    ts, xs, ys, ths = simulate_states(FnHandle(fn), TimedWaypoints(["Goal"], [50.0]), OPEN)
    d = np.hypot(np.diff(xs), np.diff(ys))
    dth = np.abs(np.angle(np.exp(1j * np.diff(ths))))
    assert np.all(d <= 1.0 * 0.05 + 1e-9)
    assert np.all(dth <= 2.0 * 0.05 + 1e-9)
