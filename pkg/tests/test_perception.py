import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import polyline_distance_bruteforce
from uuvftc.geometry import ConfigurationError
from uuvftc.perception import (CROSS_TRACK, HEADING, RUDDER, FaultWindow, NavErrors, Perception,
                               confirm_flag, cross_track_error, fault_labels, heading_error,
                               polyline_array, raw_fault_flag)

coord = st.floats(-50, 50, allow_nan=False)


@given(pts=st.lists(st.tuples(coord, coord), min_size=2, max_size=5), p=st.tuples(coord, coord))
def test_cross_track_matches_bruteforce(pts, p):
    poly = np.array(pts)
    if np.any(np.hypot(*np.diff(poly, axis=0).T) < 1e-3):
        return
    # brute force samples every millimetre, so it can overshoot by half a step
    exact = cross_track_error(p, poly)
    brute = polyline_distance_bruteforce(p, poly, step=1e-3)
    assert exact - 1e-9 <= brute <= exact + 5e-4 + 1e-9


def test_cross_track_examples():
    assert cross_track_error((5, 3), [(0, 0), (10, 0)]) == pytest.approx(3.0)
    assert cross_track_error((-3, 4), [(0, 0), (10, 0)]) == pytest.approx(5.0)


def test_heading_error_wraps():
    assert heading_error(math.radians(170), math.radians(-170)) == pytest.approx(math.radians(-20))
    assert heading_error(0.0, 0.5) == pytest.approx(-0.5)


@pytest.mark.parametrize("e_p,e_psi,ok,flag,labels", [
    (2.9, 0.1, True, 0, set()),
    (3.0, 0.1, True, 0, set()),          # strict inequality
    (3.1, 0.1, True, 1, {CROSS_TRACK}),
    (0.0, -0.4, True, 1, {HEADING}),
    (0.0, 0.0, False, 1, {RUDDER}),
    (4.0, 0.5, False, 1, {CROSS_TRACK, HEADING, RUDDER}),
])
def test_raw_flag_examples(e_p, e_psi, ok, flag, labels):
    e = NavErrors(e_p, e_psi)
    assert raw_fault_flag(e, ok, 3.0, 0.35) == flag
    assert fault_labels(e, ok, 3.0, 0.35) == labels


def test_bad_thresholds():
    with pytest.raises(ConfigurationError):
        raw_fault_flag(NavErrors(0, 0), True, 0.0, 0.3)
    with pytest.raises(ConfigurationError):
        Perception(3.0, -1.0, 5)
    with pytest.raises(ConfigurationError):
        FaultWindow(0)
    with pytest.raises(ConfigurationError):
        polyline_array([(0, 0)])


def test_window_needs_n_consecutive_ones():
    w = FaultWindow(5)
    out = [confirm_flag(w, a) for a in [1, 1, 1, 1, 0, 1, 1, 1, 1, 1]]
    assert out == [0, 0, 0, 0, 0, 0, 0, 0, 0, 1]


@given(flags=st.lists(st.integers(0, 1), min_size=1, max_size=60), n=st.integers(1, 8))
def test_window_is_conjunction_of_last_n(flags, n):
    w = FaultWindow(n)
    for k, a in enumerate(flags):
        c = confirm_flag(w, a)
        expect = k + 1 >= n and all(flags[k + 1 - n:k + 1])
        assert c == int(expect)


@given(flags=st.lists(st.integers(0, 1), max_size=40), n=st.integers(1, 6))
def test_more_ones_never_unconfirm(flags, n):
    # turning any 0 into a 1 can only add confirmations
    raised = [1] * len(flags)
    wa, wb = FaultWindow(n), FaultWindow(n)
    for a, b in zip(flags, raised):
        assert confirm_flag(wa, a) <= confirm_flag(wb, b)


def test_isolated_spike_is_rejected():
    p = Perception(3.0, math.pi, 5)
    line = [(0, 0), (100, 0)]
    ys = [0.5, 0.5, 8.0, 0.5, 0.5, 0.5, 0.5, 0.5]
    assert not any(p.evaluate((10, y), 0.0, 0.0, line, True).confirmed for y in ys)


def test_latch_and_release():
    p = Perception(3.0, math.pi, 2)
    line = [(0, 0), (100, 0)]
    r1 = p.evaluate((10, 5), 0, 0, line, True)
    r2 = p.evaluate((10, 5), 0, 0, line, True)
    assert not r1.confirmed and r2.confirmed and r2.rising
    r3 = p.evaluate((10, 0), 0, 0, line, True)
    assert r3.confirmed and not r3.rising and r3.alpha == 0
    p.release()
    assert not p.latched and len(p.window) == 0
    assert not p.evaluate((10, 5), 0, 0, line, True).confirmed
