import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from helpers import SMALL_WORLD, random_formula, random_trajectory
from stlplan.signal import (
    CHARGE_SECONDS,
    SubgoalSequence,
    TimedTrajectory,
    TimedWaypoints,
    derive_channels,
    format_trajectory,
    parse_trajectory,
    polyline_trajectory,
    resample,
)
from stlplan.stl import Interval, Finally, robustness_signal


def _line(ts, xs, ys=None):
    return TimedTrajectory(ts, xs, ys if ys is not None else [0.0] * len(ts))


# -- validation ---------------------------------------------------------------


@pytest.mark.parametrize(
    "t, x, y",
    [([], [], []), ([0, 0], [0, 1], [0, 1]), ([1, 0], [0, 1], [0, 1]), ([0, 1], [0], [0, 1]), ([0, 1], [0, math.nan], [0, 1])],
)
def test_trajectory_validation(t, x, y):
    with pytest.raises(ValueError):
        TimedTrajectory(t, x, y)


def test_channel_length_must_match():
    with pytest.raises(ValueError):
        TimedTrajectory([0, 1], [0, 0], [0, 0], {"K": [True]})


def test_trajectory_is_immutable():
    tr = _line([0, 1], [0, 1])
    with pytest.raises(ValueError):
        tr.x[0] = 5.0


def test_waypoints_validation():
    with pytest.raises(ValueError):
        TimedWaypoints(["A", "B"], [1.0, 1.0])
    with pytest.raises(ValueError):
        TimedWaypoints(["A"], [-0.5])
    with pytest.raises(ValueError):
        TimedWaypoints([], [])
    with pytest.raises(ValueError):
        SubgoalSequence([])


def test_waypoint_dwells_collapse():
    wp = TimedWaypoints(["A", "C", "C", (1.0, 2.0), "B"], [1, 2, 5.5, 6, 7])
    assert wp.collapsed_targets() == ("A", "C", (1.0, 2.0), "B")
    assert wp.scaled(2).times == (2.0, 4.0, 11.0, 12.0, 14.0)
    assert wp.points(SMALL_WORLD)[0] == (1.0, 1.0)


# -- resample -----------------------------------------------------------------


def test_resample_linear():
    tr = resample(_line([0, 1], [0, 1]), 0.5)
    np.testing.assert_array_equal(tr.t, [0, 0.5, 1])
    np.testing.assert_array_equal(tr.x, [0, 0.5, 1])


def test_resample_at_existing_spacing_is_identity():
    tr = _line([0, 0.25, 0.5, 0.75], [0, 3, -1, 2], [1, 1, 2, 2])
    assert resample(tr, 0.25) == tr


def test_resample_keeps_endpoint_off_grid():
    tr = resample(_line([0, 1.3], [0, 1.3]), 0.5)
    np.testing.assert_array_equal(tr.t, [0, 0.5, 1.0, 1.3])


def test_resample_errors():
    with pytest.raises(ValueError):
        resample(_line([0, 1], [0, 1]), 0)
    with pytest.raises(ValueError):
        resample(_line([0], [0]), 0.1)


def test_resample_holds_channels():
    tr = TimedTrajectory([0, 1, 2], [0, 1, 2], [0, 0, 0], {"K": [False, True, True]})
    out = resample(tr, 0.25)
    assert list(out.channels["K"]) == [False] * 4 + [True] * 5


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.05, 0.3]))
def test_resample_preserves_endpoints_and_range(seed, dt):
    rng = random.Random(seed)
    tr = random_trajectory(rng)
    if len(tr) < 2:
        return
    out = resample(tr, dt)
    assert out.t[0] == tr.t[0] and out.t[-1] == tr.t[-1]
    assert out.x[0] == tr.x[0] and out.x[-1] == tr.x[-1]
    assert out.y[-1] == tr.y[-1]
    assert out.x.min() >= tr.x.min() and out.x.max() <= tr.x.max()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dense_resampling_changes_rho_by_at_most_the_segment_length(seed):
    # A region predicate is 1-Lipschitz in position.  Every dense point lies
    # within half a segment of some sample, and every sample lies on a segment
    # that contains dense points, so the two values differ by at most one
    # segment length.
    rng = random.Random(seed)
    tr = random_trajectory(rng, max_len=5)
    if len(tr) < 2:
        return
    f = Finally(Interval(0.0, math.inf), random_formula(rng, 0))
    if f.arg.kind == "holds":
        return
    coarse = robustness_signal(f, tr, SMALL_WORLD)[0]
    dense = robustness_signal(f, resample(tr, 0.01), SMALL_WORLD)[0]
    seg = float(np.max(np.hypot(np.diff(tr.x), np.diff(tr.y))))
    assert dense - coarse <= seg / 2 + 1e-9
    assert coarse - dense <= seg + 1e-9


def test_polyline_trajectory():
    tr = polyline_trajectory([(0, 0), (1, 0), (1, 1)], [0, 1, 2], 0.5)
    np.testing.assert_array_equal(tr.t, [0, 0.5, 1, 1.5, 2])
    np.testing.assert_array_equal(tr.y, [0, 0, 0, 0.5, 1])


# -- derived channels ---------------------------------------------------------


def test_key_channel_vacuous_and_entry():
    never = derive_channels(_line([0, 1, 2], [-1, -1, -1]), SMALL_WORLD)
    assert not never.channels["K"].any()
    # K is [2,3]x[0,1]; entered at t=4
    tr = derive_channels(_line([0, 2, 4, 6], [0, 1, 2.5, 0], [0.5] * 4), SMALL_WORLD)
    assert list(tr.channels["K"]) == [False, False, True, True]


def test_charged_after_three_second_dwell():
    # dwell in charger C = [0,1]x[2,3] from t=2 to t=5.2
    ts = [round(0.2 * k, 10) for k in range(35)]
    xs = [0.5 if 2 - 1e-12 <= t <= 5.2 + 1e-12 else 4.0 for t in ts]
    tr = derive_channels(_line(ts, xs, [2.5] * len(ts)), SMALL_WORLD)
    charged = tr.channels["charged"]
    for t, c in zip(ts, charged):
        assert c == (t >= 5.0 - 1e-9), t
    assert list(charged) == list(oracle.channels(list(tr.t), list(tr.x), list(tr.y), SMALL_WORLD)["charged"])


def test_interrupted_dwell_does_not_charge():
    ts = [0, 1, 2, 2.5, 3, 4, 5]
    xs = [0.5, 0.5, 0.5, 4.0, 0.5, 0.5, 0.5]
    tr = derive_channels(_line(ts, xs, [2.5] * len(ts)), SMALL_WORLD)
    assert not tr.channels["charged"].any()
    assert CHARGE_SECONDS == 3.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_channels_match_brute_force_and_are_monotone(seed):
    tr = derive_channels(random_trajectory(random.Random(seed)), SMALL_WORLD)
    ref = oracle.channels(list(tr.t), list(tr.x), list(tr.y), SMALL_WORLD)
    for name, values in tr.channels.items():
        assert list(values) == list(ref[name])
        assert not np.any(values[:-1] & ~values[1:])  # never true -> false
    assert derive_channels(tr, SMALL_WORLD) == tr


# -- text export --------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_text_round_trip_is_exact(seed):
    tr = derive_channels(random_trajectory(random.Random(seed)), SMALL_WORLD)
    text = format_trajectory(tr)
    assert text.splitlines()[0] == "t x y K charged"
    assert parse_trajectory(text) == tr


def test_parse_errors():
    with pytest.raises(ValueError, match="header"):
        parse_trajectory("0 1 2\n")
    with pytest.raises(ValueError, match="line 3"):
        parse_trajectory("t x y\n0 0 0\n1 1\n")
