"""End-to-end acceptance suite. Each test prints one PASS/FAIL line for its
criterion; the lines are repeated in the pytest terminal summary."""
import itertools
import json
import math
import re
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import uuvftc.solver as solver
from oracles import arc_min_clearance, edge_clearance, inside_hull, random_convex_polygon
from uuvftc.bus import MsgType, decode, encode
from uuvftc.geometry import KNOT, Arc, fillet_route
from uuvftc.reasoner import ScriptedReasoner
from uuvftc.reasoner.strategy import (MANDATORY, OutOfSchemaAction, ParseError, ParseLimits,
                                      StrategyTheta, admit_extra_action, parse_symbolic, serialize)
from uuvftc.scenarios.config import load
from uuvftc.scenarios.runner import run_scenario
from uuvftc.scenarios.tuning import tune_gains
from uuvftc.scheduler import Agent
from uuvftc.sensors import NoiseConfig
from uuvftc.simulator import VehicleSim

SEEDS = range(20)


def _position_error_bound(noise: NoiseConfig) -> float:
    """Largest lateral offset the sim preset can put between estimate and truth."""
    return noise.lat_drift_max + 3.0 * noise.lat_white


@pytest.fixture
def verdict(request, capsys):
    def report(n: int, checks: dict[str, bool], detail: str):
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        if failed:
            line += f" [failed: {', '.join(failed)}]"
        request.config.acceptance_lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def _drive(cfg):
    """Closed loop without the transport, exposing the simulator's hidden state."""
    agent, sim = Agent(cfg), VehicleSim(cfg)
    agent.start()
    rep = sim.report()
    n_cap = int(round(cfg.timing.duration_cap / cfg.timing.dt))
    trace = []
    while True:
        frame = agent.on_report(rep)
        trace.append((rep.truth, sim.aug, frame, agent.mode, agent.command.source.value))
        if agent.complete or rep.tick >= n_cap:
            break
        rep = sim.step(frame)
    agent.close()
    return agent, trace


# ----------------------------------------------------------------------- 1
def test_criterion_1_nominal_lake_mission(verdict):
    base = load("exp_n")
    best, _ = tune_gains(base)
    cfg = base.with_overrides(guidance=replace(base.guidance, Kp=best.Kp, Kd=best.Kd))
    peaks, flags, done, slow = [], 0, 0, 0.0
    for s in SEEDS:
        t0 = time.perf_counter()
        m = run_scenario(cfg.with_overrides(seed=s)).metrics
        slow = max(slow, time.perf_counter() - t0)
        peaks.append(m.e_p_max)
        flags += m.fault_raised
        done += m.mission_completed
    under = sum(p < 3.0 for p in peaks)
    verdict(1, {"tuned gains clean": best.clean, "no flag": flags == 0, "all complete": done == 20,
                "e_p_max < 3 on >= 18/20": under >= 18, "runtime < 10 s": slow < 10.0},
            f"Exp-N tuned Kp={best.Kp} Kd={best.Kd}; e_p_max < 3.0 m on {under}/20 seeds "
            f"(max {max(peaks):.2f} m); flags {flags}; completed {done}/20; slowest seed {slow:.1f} s")


# ----------------------------------------------------------------------- 2
def test_criterion_2_lower_rudder_fault(verdict):
    cfg = load("exp_f")
    r = run_scenario(cfg)
    m = r.metrics
    again = run_scenario(cfg).transcript == r.transcript
    verdict(2, {
        "flag raised": m.fault_raised,
        "within n_w cycles": m.detection_cycles is not None and m.detection_cycles <= cfg.thresholds.n_w,
        "proposal (12 m, 1 kn)": m.first_proposal_radius == 12.0
        and m.first_proposal_speed == pytest.approx(KNOT),
        "PASS 3/3 first invocation": m.solver_invocations == 1 and m.first_attempt_pass
        and m.first_attempt_checks == 3,
        "mission complete": m.mission_completed,
        "deterministic": again,
    }, f"Exp-F exceed at {m.first_exceed_time:.1f} s, confirmed at {m.detection_time:.1f} s "
       f"({m.detection_cycles} cycles); proposal R={m.first_proposal_radius} m "
       f"u={m.first_proposal_speed:.3f} m/s; checks {m.first_attempt_checks}/3; "
       f"completed={m.mission_completed}")


# ----------------------------------------------------------------------- 3
def _truth_table_ok() -> bool:
    orig = solver.check_boundary, solver.check_speed, solver.check_fault_radius
    theta = StrategyTheta(12.0, KNOT, ((20, 20), (60, 20), (60, 60)), 0.0)
    area = solver.NavigableArea(((0, 0), (100, 0), (100, 100), (0, 100)), 5.0)
    ok = True
    try:
        for b, s, rr in itertools.product([True, False], repeat=3):
            solver.check_boundary = lambda *a, _v=b, **k: (_v, {})
            solver.check_speed = lambda *a, _v=s, **k: (_v, {})
            solver.check_fault_radius = lambda *a, _v=rr, **k: (_v, {})
            v = solver.verify(theta, area, solver.SolverLimits(), True)
            want = {lbl for lbl, good in (("boundary", b), ("speed", s), ("radius", rr)) if not good}
            ok &= v.violations == want and v.passed == (not want) and v.checks_passed == 3 - len(want)
    finally:
        solver.check_boundary, solver.check_speed, solver.check_fault_radius = orig
    return ok


def test_criterion_3_solver(verdict):
    table = _truth_table_ok()
    rng = np.random.default_rng(2024)
    worst_pt, worst_arc, n_pts, n_arcs = 0.0, 0.0, 0, 0
    dtheta = solver.SolverLimits().dtheta
    sagitta_ok = True
    while n_pts < 1000:
        V, hull = random_convex_polygon(rng)
        area = solver.NavigableArea(tuple(map(tuple, V)), 1.0)
        p = rng.uniform(V.min(axis=0), V.max(axis=0))
        if not inside_hull(hull, p):
            continue
        worst_pt = max(worst_pt, abs(solver.boundary_distance(p, area) - edge_clearance(p, V)))
        n_pts += 1
        if n_pts % 10 == 0:
            # arcs: every sample matches the oracle; the sampled minimum sits
            # within the chord sagitta of the continuous one
            R = rng.uniform(1.0, 15.0)
            th0 = rng.uniform(-math.pi, math.pi)
            sweep = rng.uniform(0.1, math.pi)
            c = V.mean(axis=0)
            pts = Arc(tuple(c), R, th0, th0 + sweep, 1).sample(dtheta)
            if area.contains(pts).all():
                for q in pts[:: max(1, len(pts) // 4)]:
                    worst_arc = max(worst_arc, abs(solver.boundary_distance(q, area) - edge_clearance(q, V)))
                sampled = float(solver.boundary_distances(pts, area)[0].min())
                exact = arc_min_clearance(c, R, th0, th0 + sweep, V)
                sagitta_ok &= exact - 1e-6 <= sampled <= exact + R * (1 - math.cos(dtheta / 2)) + 1e-6
                n_arcs += 1

    refine_ok, fails = True, 0
    sq = solver.NavigableArea(((0, 0), (100, 0), (100, 100), (0, 100)), 5.0)
    rng = np.random.default_rng(7)
    for _ in range(300):
        p = rng.uniform(15, 85, 2)
        h, turn, R = rng.uniform(-math.pi, math.pi), rng.uniform(0.3, 2.8), rng.uniform(6, 30)
        q = p + 30 * np.array([math.cos(h), math.sin(h)])
        r = q + 30 * np.array([math.cos(h + turn), math.sin(h + turn)])
        route = fillet_route([p, q, r], R)
        d = math.radians(5.0)
        prev, _ = solver.check_boundary(route, sq, d)
        fails += not prev
        for _ in range(4):
            d /= 2
            now, _ = solver.check_boundary(route, sq, d)
            refine_ok &= prev or not now
            prev = now
    verdict(3, {"truth table": table, "points within 1e-6": worst_pt <= 1e-6,
                "arc samples within 1e-6": worst_arc <= 1e-6, "arc minimum": sagitta_ok,
                "refinement monotone": refine_ok},
            f"8/8 truth-table rows; oracle gap {worst_pt:.1e} m on 1000 polygons, "
            f"{worst_arc:.1e} m on {n_arcs} arcs; dtheta halving kept all {fails} FAILs")


# ----------------------------------------------------------------------- 4
def test_criterion_4_steering_lock(verdict):
    cfg = load("sim_steering_lock")
    fault = cfg.fault
    agent, trace = _drive(cfg)
    locked = [i for i, (_, aug, *_rest) in enumerate(trace) if aug.steering_locked]
    unlock = locked[-1] + 1
    psi_locked = {tr.psi for tr, *_ in trace[:unlock]}
    depths = [tr.d for tr, *_ in trace[:unlock + 1]]
    steps = [b - a for a, b in zip(depths[:-1], depths[1:]) if b != a]
    rise = trace[unlock][0].d - trace[0][0].d
    after = trace[unlock:]
    resumed = any(src == "Replanned" and mode == "track" for *_, mode, src in after) \
        and len({round(tr.psi, 6) for tr, *_ in after}) > 1
    target = np.array(cfg.strategy.target[:2])
    end = trace[-1][0]
    miss = float(np.hypot(end.x - target[0], end.y - target[1]))
    # completion is declared on the estimate, so truth may sit up to the sensor error further out
    reached = agent.complete and miss <= cfg.thresholds.r_acc + _position_error_bound(cfg.noise)

    scfg = load("sim_surface")
    s_agent, s_trace = _drive(scfg)
    s_run = run_scenario(scfg)
    n = NoiseConfig.preset("sim")
    band = n.depth_bias_max + 3 * n.depth_white
    meas = [s.meas.d_m for s in s_run.steps if s.meas is not None]
    surface_ok = (s_agent.complete and all(tr.d == 0.0 for tr, *_ in s_trace)
                  and all(aug.cum_dive == 0.0 for _, aug, *_r in s_trace)
                  and all(0.0 <= d <= band for d in meas))
    verdict(4, {"rise exactly 0.2 m": abs(rise - fault["dd_unlock"]) < 1e-12,
                "steps <= 0.2 m": all(0 < s <= fault["dd_max"] + 1e-12 for s in steps),
                "heading frozen while locked": len(psi_locked) == 1,
                "replanned tracking resumes": resumed, "recovery point reached": reached,
                "surface variant": surface_ok},
            f"lock held {unlock * cfg.timing.dt:.2f} s, depth +{rise:.3f} m in {len(steps)} step(s), "
            f"heading frozen; recovery miss {miss:.2f} m; surface run truth depth 0, "
            f"measured depth max {max(meas):.3f} m <= {band:.3f} m")


# ----------------------------------------------------------------------- 5
def test_criterion_5_cross_current(verdict):
    cfg = load("sim_crosscurrent")
    r = run_scenario(cfg)
    m = r.metrics
    period = cfg.timing.slow_period
    verifs = [x for x in r.messages if x.msg_type is MsgType.VERIFICATION_RESULT]
    admitted = [a for v in verifs if v.payload.passed
                for a in json.loads(v.payload.details)["extra_actions"]
                if a["kind"] == "rudder_bias" and a["admitted"]]
    bias_ok = bool(admitted) and admitted[0]["params"][0] == pytest.approx(math.radians(-11.5))
    applied = any(s.cmd.rudder_bias == pytest.approx(math.radians(-11.5)) for s in r.steps)
    dmax = cfg.limits.delta_max
    worst = max(abs(s.cmd.total_rudder) for s in r.steps)
    target = cfg.strategy.target
    end = r.steps[-1].truth
    miss = math.hypot(end.x - target[0], end.y - target[1])
    verdict(5, {"trigger within one period": m.time_to_trigger is not None
                and abs(m.time_to_trigger - 100.0 / 3.0) <= period,
                "bias admitted": bias_ok and applied,
                "target reached": m.mission_completed
                and miss <= cfg.thresholds.r_acc + _position_error_bound(cfg.noise),
                "rudder invariant": worst <= dmax + 1e-12},
            f"trigger {m.time_to_trigger:.1f} s (33.3 +/- {period:.0f} s); bias "
            f"{math.degrees(admitted[0]['params'][0]) if admitted else float('nan'):.1f} deg admitted; "
            f"target miss {miss:.2f} m; max |rudder+bias| {math.degrees(worst):.1f} deg over {len(r.steps)} steps")


# ----------------------------------------------------------------------- 6
def test_criterion_6_dvl_rescale(verdict):
    only, mcp, reductions, same_trace = [], [], [], True
    for s in SEEDS:
        a = run_scenario(load("sim_dvl_kf_only").with_overrides(seed=s))
        b = run_scenario(load("sim_dvl").with_overrides(seed=s))
        # runs end when each estimate reaches the goal, so compare the common span
        n = min(len(a.steps), len(b.steps))
        same_trace &= [x.truth for x in a.steps[:n]] == [x.truth for x in b.steps[:n]]
        same_trace &= [x.meas for x in a.steps[:n]] == [x.meas for x in b.steps[:n]]
        only.append(a.metrics.peak_lateral_err)
        mcp.append(b.metrics.peak_lateral_err)
        reductions.append(1.0 - mcp[-1] / only[-1])
    mean_only = float(np.mean(only))
    verdict(6, {"identical traces": same_trace, ">= 50% every seed": min(reductions) >= 0.5,
                "baseline 3.3 +/- 0.5 m": abs(mean_only - 3.3) <= 0.5},
            f"kf_only peak mean {mean_only:.2f} m (range {min(only):.2f}-{max(only):.2f}); "
            f"kf_mcp mean {np.mean(mcp):.2f} m; reduction min {100 * min(reductions):.1f}% "
            f"mean {100 * np.mean(reductions):.1f}% over 20 seeds")


# ----------------------------------------------------------------------- 7
class _SlowEndpoint(ScriptedReasoner):
    mode = "endpoint"

    def generate(self, prompt):
        if not prompt.initial:
            time.sleep(0.6)
        return super().generate(prompt)


def _causal(msgs) -> bool:
    ok = [m.t_stamp for m in msgs] == sorted(m.t_stamp for m in msgs)
    strat, passed = set(), set()
    for m in msgs:
        if m.msg_type is MsgType.STRATEGY:
            strat.add(m.corr_id)
        elif m.msg_type is MsgType.VERIFICATION_RESULT:
            ok &= m.corr_id in strat
            if m.payload.passed:
                passed.add(m.corr_id)
        elif m.msg_type is MsgType.CONTROL_COMMAND and m.payload.source == "Replanned":
            ok &= bool(passed)
    first = next((m for m in msgs if m.msg_type is MsgType.CONTROL_COMMAND
                  and m.payload.source == "Replanned"), None)
    return ok and (first is None or first.corr_id in passed)


def test_criterion_7_pipeline(verdict):
    names = ("exp_f", "sim_steering_lock", "sim_surface", "sim_crosscurrent", "sim_dvl")
    runs = {n: run_scenario(load(n)) for n in names}
    lines = sum(len(r.transcript) for r in runs.values())
    codec = all(encode(decode(x)) == x for r in runs.values() for x in r.transcript)
    causal = all(_causal(r.messages) for r in runs.values())
    identical = all(run_scenario(load(n)).transcript == runs[n].transcript for n in names)

    cfg = load("exp_f")
    r = run_scenario(cfg, reasoner=_SlowEndpoint(cfg.strategy, cfg.limits, cfg.area),
                     wall_clock=True, duration_cap=110.0)
    msgs = r.messages
    req = next(m for m in msgs if m.msg_type is MsgType.PLANNING_REQUEST and m.corr_id == "c1a0")
    got = next(m for m in msgs if m.msg_type is MsgType.STRATEGY and m.corr_id == "c1a0")
    ticks = [s.t for s in r.steps if req.t_stamp <= s.t <= got.t_stamp]
    gaps = {round(b - a, 9) for a, b in zip(ticks[:-1], ticks[1:])}
    walls = [m.wall for m in msgs if m.msg_type is MsgType.CONTROL_COMMAND
             and req.t_stamp < m.t_stamp < got.t_stamp]
    periods = np.diff(walls)
    cadence = gaps == {cfg.timing.dt} and len(periods) >= 4 and bool(np.all(np.abs(periods - 0.1) < 0.05))
    verdict(7, {"codec round trip": codec, "causality": causal, "fast-tick cadence": cadence,
                "byte-identical reruns": identical},
            f"{lines} transcript lines round-trip over {len(names)} scenarios; causal ordering holds; "
            f"{len(ticks)} fast ticks at {cfg.timing.dt} s during a {got.t_stamp - req.t_stamp:.2f} s "
            f"in-flight call, command wall period {np.mean(periods):.3f} s; reruns byte-identical")


# ----------------------------------------------------------------------- 8
class _AlwaysTooTight(ScriptedReasoner):
    def generate(self, prompt):
        if prompt.initial:
            return super().generate(prompt)
        return "radius: 4 m\nspeed: 1 kn\nwaypoints: (60,0);(100,0);(100,30)\nreturn_heading: 0\n"


def test_criterion_8_retry_loop(verdict):
    cfg = load("exp_f")
    r = run_scenario(replace(cfg, strategy=replace(cfg.strategy, first_radius=4.0)))
    v = [m.payload for m in r.messages if m.msg_type is MsgType.VERIFICATION_RESULT]
    theta = [m.payload.theta for m in r.messages if m.msg_type is MsgType.STRATEGY and m.corr_id != "c0a0"]
    retry_ok = (not v[0].passed and v[0].violations == ("radius",) and v[1].passed
                and "radius: 4.0 m" in theta[0] and "radius: 12.0 m" in theta[1]
                and r.metrics.mission_completed)

    h = run_scenario(cfg, reasoner=_AlwaysTooTight(cfg.strategy, cfg.limits, cfg.area),
                     duration_cap=150.0)
    msgs = h.messages
    first = [m for m in msgs if m.msg_type is MsgType.VERIFICATION_RESULT
             and re.fullmatch(r"c1a\d+", m.corr_id)]
    cmds = [m for m in msgs if m.msg_type is MsgType.CONTROL_COMMAND]
    k = next((i for i, m in enumerate(cmds) if m.payload.source == "HoldFallback"), None)
    hold_ok = (len(first) == cfg.n_max + 1 and not any(m.payload.passed for m in first)
               and k is not None and cmds[k].corr_id == f"c1a{cfg.n_max}")
    absorbing = k is not None and all(m.payload.source == "HoldFallback"
                                      and m.payload.speed_setpoint == cfg.limits.u_min
                                      for m in cmds[k:])
    verdict(8, {"retry then pass": retry_ok, "hold after n_max retries": hold_ok,
                "hold absorbing": absorbing},
            f"R=4 m -> FAIL{{radius}} -> R=12 m PASS; always-infeasible reasoner: "
            f"{len(first)} verdicts then HoldFallback at {cfg.limits.u_min} m/s, "
            f"{len(cmds) - (k or 0)} later commands all HoldFallback")


# ----------------------------------------------------------------------- 9
_coord = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
_thetas = st.builds(
    StrategyTheta,
    R_new=st.floats(1e-3, 1000.0), u_new=st.floats(1e-3, 10 * KNOT),
    waypoints_new=st.lists(st.one_of(st.tuples(_coord, _coord),
                                     st.tuples(_coord, _coord, st.floats(0, 500))),
                           min_size=1, max_size=8).map(tuple),
    psi_ret=st.floats(-math.pi, math.pi),
    extra_actions=st.lists(st.one_of(
        st.builds(OutOfSchemaAction.rudder_bias, st.floats(-3, 3)),
        st.builds(OutOfSchemaAction.kf_scale, st.floats(1e-3, 100), st.floats(1e-3, 100),
                  st.floats(1e-3, 100))), max_size=2).map(tuple),
)


def _passes(prop) -> bool:
    try:
        prop()
        return True
    except AssertionError:
        return False


def test_criterion_9_parser_admission(verdict):
    lim = ParseLimits()
    dmax = math.radians(60)

    @settings(max_examples=1000, database=None)
    @given(theta=_thetas)
    def round_trip(theta):
        assert parse_symbolic(serialize(theta), lim) == theta

    @settings(max_examples=300, database=None)
    @given(theta=_thetas, drop=st.sampled_from(MANDATORY))
    def mandatory(theta, drop):
        text = "\n".join(x for x in serialize(theta).splitlines() if not x.startswith(drop + ":"))
        try:
            parse_symbolic(text, lim)
        except ParseError:
            return
        raise AssertionError("parsed without " + drop)

    @settings(max_examples=300, database=None)
    @given(f=st.lists(st.floats(0.001, 100), min_size=3, max_size=3), i=st.integers(0, 2),
           bad=st.floats(-1e6, 0.0))
    def non_positive(f, i, bad):
        f[i] = bad
        assert not admit_extra_action(OutOfSchemaAction.kf_scale(*f), dmax)

    above = math.nextafter(dmax, math.inf)
    boundary = (admit_extra_action(OutOfSchemaAction.rudder_bias(dmax), dmax)
                and admit_extra_action(OutOfSchemaAction.rudder_bias(-dmax), dmax)
                and not admit_extra_action(OutOfSchemaAction.rudder_bias(above), dmax)
                and not admit_extra_action(OutOfSchemaAction.rudder_bias(-above), dmax))
    verdict(9, {"round trip": _passes(round_trip), "mandatory fields": _passes(mandatory),
                "bias boundary": boundary, "scale rejects <= 0": _passes(non_positive)},
            "parse(serialize(theta)) == theta on 1000 thetas; every mandatory-field removal "
            "raises ParseError; |bias| = 60 deg admitted, next float rejected; "
            "any non-positive scale factor rejected")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
