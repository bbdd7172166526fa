import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uuvftc.geometry import KNOT
from uuvftc.reasoner.strategy import (MANDATORY, ActionKind, OutOfSchemaAction, ParseError,
                                      ParseLimits, StrategyTheta, admit_extra_action,
                                      parse_symbolic, serialize)

LIM = ParseLimits()
DELTA_MAX = math.radians(60)

coord = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
waypoint = st.one_of(st.tuples(coord, coord), st.tuples(coord, coord, st.floats(0, 500)))
action = st.one_of(
    st.builds(OutOfSchemaAction.rudder_bias, st.floats(-3, 3)),
    st.builds(OutOfSchemaAction.kf_scale, st.floats(1e-3, 100), st.floats(1e-3, 100),
              st.floats(1e-3, 100)),
)
thetas = st.builds(
    StrategyTheta,
    R_new=st.floats(1e-3, LIM.r_max),
    u_new=st.floats(1e-3, LIM.u_max),
    waypoints_new=st.lists(waypoint, min_size=1, max_size=8).map(tuple),
    psi_ret=st.floats(-math.pi, math.pi),
    extra_actions=st.lists(action, max_size=2).map(tuple),
)


@settings(max_examples=1000)
@given(theta=thetas)
def test_parse_serialize_identity(theta):
    diag = []
    assert parse_symbolic(serialize(theta), LIM, diag) == theta
    assert diag == []


@given(theta=thetas, drop=st.sampled_from(MANDATORY))
def test_dropping_a_mandatory_field_raises(theta, drop):
    lines = [ln for ln in serialize(theta).splitlines() if not ln.startswith(drop + ":")]
    with pytest.raises(ParseError):
        parse_symbolic("\n".join(lines), LIM)


def test_units_and_single_line_form():
    t = parse_symbolic("radius: 12 m, speed: 1 kn, waypoints: (0,8);(90,8), return_heading: 180 deg")
    assert t.R_new == 12.0 and t.u_new == pytest.approx(KNOT)
    assert t.psi_ret == pytest.approx(math.pi)
    assert t.waypoints_new == ((0.0, 8.0), (90.0, 8.0))


def test_extra_actions_parse():
    t = parse_symbolic("radius: 10\nspeed: 2\nwaypoints: (0,0)\nreturn_heading: 0\n"
                       "extra: rudder_bias(-11.5 deg)\nextra: kf_scale 8.0 0.5 20.0\n")
    assert t.actions(ActionKind.RUDDER_BIAS)[0].bias == pytest.approx(math.radians(-11.5))
    assert t.actions(ActionKind.KF_COVARIANCE_SCALE)[0].params == (8.0, 0.5, 20.0)


def test_clipping_is_reported():
    diag = []
    t = parse_symbolic("radius: 5000\nspeed: 30 kn\nwaypoints: (0,0)\nreturn_heading: 0", LIM, diag)
    assert t.R_new == LIM.r_max and t.u_new == LIM.u_max
    assert len(diag) == 2 and all(d.startswith("clip") for d in diag)


@pytest.mark.parametrize("raw", [
    "radius: 5\nradius: 6\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0",
    "radius: five\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0",
    "radius: 5 ft\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0",
    "radius: -5\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0",
    "radius: 5\nspeed: 1\nwaypoints: somewhere\nreturn_heading: 0",
    "radius: 5\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0\nextra: jettison 1",
    "radius: 5\nspeed: 1\nwaypoints: (0,0)\nreturn_heading: 0\nextra: kf_scale 1 2",
    "",
])
def test_malformed_text(raw):
    with pytest.raises(ParseError):
        parse_symbolic(raw)


def test_rudder_bias_admission_boundary_is_exact():
    assert admit_extra_action(OutOfSchemaAction.rudder_bias(DELTA_MAX), DELTA_MAX)
    assert admit_extra_action(OutOfSchemaAction.rudder_bias(-DELTA_MAX), DELTA_MAX)
    above = math.nextafter(DELTA_MAX, math.inf)
    assert not admit_extra_action(OutOfSchemaAction.rudder_bias(above), DELTA_MAX)
    assert not admit_extra_action(OutOfSchemaAction.rudder_bias(-above), DELTA_MAX)


@given(b=st.floats(-10, 10))
def test_rudder_bias_admission_matches_bound(b):
    assert admit_extra_action(OutOfSchemaAction.rudder_bias(b), DELTA_MAX) == (abs(b) <= DELTA_MAX)


@given(f=st.lists(st.floats(-100, 100), min_size=3, max_size=3), i=st.integers(0, 2),
       bad=st.floats(-1e6, 0.0))
def test_kf_scale_rejects_non_positive_factor(f, i, bad):
    f[i] = bad
    assert not admit_extra_action(OutOfSchemaAction.kf_scale(*f), DELTA_MAX)


def test_kf_scale_admits_positive_factors():
    assert admit_extra_action(OutOfSchemaAction.kf_scale(8.0, 0.5, 20.0), DELTA_MAX)
    assert not admit_extra_action(OutOfSchemaAction.kf_scale(8.0, math.nan, 20.0), DELTA_MAX)


def test_schema_problems():
    assert StrategyTheta(5, 1, ((0, 0),), 0).schema_problems() == []
    assert StrategyTheta(math.inf, 1, ((0, 0),), 0).schema_problems()
    assert StrategyTheta(5, 1, ((0, 0, 1, 2),), 0).schema_problems()
    assert StrategyTheta(5, -1, ((0, 0),), 0).schema_problems()
