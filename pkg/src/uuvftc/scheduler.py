"""Agent side of the loop: estimation, perception, the replanning pipeline
and fast-loop guidance, with every inter-module message recorded.

Sim-time is authoritative. In scripted mode the reasoner and solver results
are published a configured number of fast ticks after the request; in
endpoint mode the reasoner call runs on a worker thread and is polled every
fast tick. Either way the fast loop keeps issuing commands from the current
plan while a request is outstanding.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bus
from .bus import MsgType, TypedMessage
from .dynamics import VehicleParams, VehicleState, yaw_rate
from .estimator import (KfNoiseParams, KfState, kf_predict, kf_update_dvl, kf_update_gps,
                        rescale_covariances, rotated_velocity_noise)
from .geometry import densify_route, fillet_route, left_normal, unit, wrap_angle
from .guidance import (CommandSource, ControlCommand, Dispatch, HeadingController, HoldFallback,
                       WaypointPlan, advance_waypoint, decide, join_plan, los_heading,
                       speed_setpoint)
from .perception import Perception, assemble_context
from .reasoner.endpoint import EndpointConfig, EndpointReasoner, RetryableReasonerError
from .reasoner.memory import MemoryStores
from .reasoner.prompt import MissionTask, build_prompt
from .reasoner.scripted import ScriptedReasoner
from .reasoner.strategy import (ActionKind, ParseError, ParseLimits, StrategyTheta,
                                admit_extra_action, parse_symbolic, serialize)
from .simulator import ActuatorFrame, SensorReport
from .solver import SCHEMA, SolverVerdict, verify

EPS_VAR = 1e-6


class NavEstimator:
    """Estimated vehicle state fed to perception and guidance.

    ``raw`` takes measured position as is; ``lake_kf`` fuses GPS with the
    speed-log/compass velocity; ``dvl_kf`` fuses GPS with the DVL. Between
    sensor samples the position is dead-reckoned and the heading propagated
    with the nominal turn-rate model.
    """

    def __init__(self, cfg):
        e = cfg.estimator
        init = cfg.initial
        self.cfg = cfg
        self.mode = e.mode
        self.base_params = KfNoiseParams(e.q_vel, e.r_gps, e.r_dvl)
        self.params = self.base_params
        self.kf: KfState | None = None
        self.pos = np.array([init.x, init.y], dtype=float)
        self.psi = wrap_angle(init.psi)
        self.u = init.u
        self.d = init.d
        self.rudder_ok = True
        self.last_t: float | None = None
        self.model = VehicleParams()

    def measure(self, m, dvl, t: float) -> None:
        self.psi = wrap_angle(m.psi_m)
        self.u = max(0.0, m.u_m)
        self.d = m.d_m
        self.rudder_ok = m.rudder_ok_m
        if self.mode == "raw":
            self.pos = np.array([m.x_m, m.y_m])
            self.last_t = t
            return
        e = self.cfg.estimator
        if self.kf is None:
            # seeded from the surveyed launch pose, not from the first fix
            init = self.cfg.initial
            v0 = init.u * unit(init.psi)
            self.kf = KfState.initial([init.x, init.y, v0[0], v0[1]], e.p0_pos, e.p0_vel)
        else:
            self.kf = kf_predict(self.kf, self.params, t - self.last_t)
        self.kf = kf_update_gps(self.kf, (m.x_m, m.y_m), self.params.r_gps)
        if self.mode == "lake_kf":
            n = self.cfg.noise
            R = rotated_velocity_noise(self.psi, max(n.sigma_u ** 2, EPS_VAR),
                                       max((self.u * n.sigma_psi) ** 2, EPS_VAR))
            self.kf = kf_update_dvl(self.kf, self.u * unit(self.psi), R)
        elif dvl is not None:
            z = dvl.vel_along * unit(self.psi) + dvl.vel_lateral * left_normal(self.psi)
            self.kf = kf_update_dvl(self.kf, z, self.params.r_dvl)
        self.pos = self.kf.mean[:2].copy()
        self.last_t = t

    def dead_reckon(self, dt: float, rudder: float) -> None:
        self.pos = self.pos + self.u * unit(self.psi) * dt
        self.psi = wrap_angle(self.psi + yaw_rate(self.u, rudder, self.model) * dt)

    def rescale(self, factors) -> None:
        # relative to the configured baseline, so a repeated command is idempotent
        self.params = rescale_covariances(self.base_params, factors)

    def state(self) -> VehicleState:
        return VehicleState(float(self.pos[0]), float(self.pos[1]), self.psi, self.u,
                            max(0.0, self.d), self.rudder_ok)


def make_reasoner(cfg, endpoint_url: str | None = None):
    if cfg.reasoner == "endpoint" or endpoint_url:
        return EndpointReasoner(EndpointConfig(endpoint_url or cfg.endpoint_url,
                                               timeout=cfg.endpoint_timeout))
    return ScriptedReasoner(cfg.strategy, cfg.limits, cfg.area)


def build_plan(theta: StrategyTheta, r_acc: float, spacing: float) -> WaypointPlan:
    route = fillet_route(theta.waypoints_new, theta.R_new)
    pts, depths = densify_route(route, spacing)
    has_depth = any(len(w) > 2 for w in theta.waypoints_new)
    wps = np.column_stack([pts, depths]) if has_depth else pts
    return WaypointPlan(wps, theta.R_new, theta.u_new, r_acc)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in obj]
        return sorted(items) if isinstance(obj, (set, frozenset)) else items
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@dataclass
class Cycle:
    index: int
    ctx: object
    attempt: int = 0
    history: list = field(default_factory=list)
    phase: str = "reason"
    due: int = 0
    prompt: object = None
    raw: str | None = None
    error: str = ""
    future: Future | None = None
    t_sent: float = 0.0
    theta: StrategyTheta | None = None
    verdict: SolverVerdict | None = None

    @property
    def corr(self) -> str:
        return f"c{self.index}a{self.attempt}"


@dataclass
class StepRecord:
    t: float
    truth: VehicleState
    meas: object
    est: VehicleState
    e_p: float
    e_psi: float
    cmd: ControlCommand
    mode: str
    confirmed: bool
    active_index: int


class Agent:
    def __init__(self, cfg, reasoner=None, wall_clock: bool = False, endpoint_url: str | None = None):
        self.cfg = cfg
        self.dt = cfg.timing.dt
        self.slow_every = cfg.slow_every
        self.limits = cfg.limits
        self.area = cfg.area
        self.est = NavEstimator(cfg)
        th = cfg.thresholds
        self.perception = Perception(th.eps_p, th.eps_psi, th.n_w)
        self.ctrl = HeadingController(cfg.guidance.Kp, cfg.guidance.Kd, cfg.limits.delta_max, self.dt)
        self.memory = MemoryStores(cfg.m_st)
        self.reasoner = reasoner or make_reasoner(cfg, endpoint_url)
        self.endpoint = getattr(self.reasoner, "mode", "scripted") == "endpoint"
        self.executor = ThreadPoolExecutor(max_workers=1) if self.endpoint else None
        self.wall_clock = wall_clock
        self.parse_limits = ParseLimits(u_max=cfg.limits.u_max)
        goal = cfg.strategy.target
        self.task = MissionTask(cfg.name, cfg.strategy.kind, tuple(goal), cfg.radius, cfg.speed,
                                cfg.area.vertices, cfg.area.d_safe, cfg.limits.u_min,
                                cfg.limits.u_max, cfg.limits.r_min_nom)
        self.transcript: list[bytes] = []
        self.steps: list[StepRecord] = []
        self.mode = cfg.guidance.phase1
        self.hold_heading: float | None = None
        self.plan: WaypointPlan | None = None
        self.hold_on_heading = wrap_angle(cfg.initial.psi)
        self.degraded = False
        self.replanned = False
        self.cycles = 0
        self.cycle: Cycle | None = None
        self.complete = False
        self.psi_des = wrap_angle(cfg.initial.psi)
        self.last_e = (0.0, 0.0)
        self.last_alpha = 0
        self.command = ControlCommand(0.0, 0.0)
        self.source = CommandSource.TRACK
        self.t = 0.0
        self.tick = 0

    # ------------------------------------------------------------------ bus
    def emit(self, t: float, src: str, dst: str, mtype: MsgType, payload, corr: str = "") -> None:
        msg = TypedMessage(round(t, 9), src, dst, mtype, payload, corr,
                           time.time() if self.wall_clock else None)
        self.transcript.append(bus.encode(msg))

    def _task_for_prompt(self) -> MissionTask:
        r_min = self.limits.r_min_fault if self._solver_rudder_fault() else self.limits.r_min_nom
        t = self.task
        return MissionTask(t.scenario, t.kind, t.goal, t.plan_radius, t.plan_speed, t.area_vertices,
                           t.d_safe, t.u_min, t.u_max, r_min)

    def _solver_rudder_fault(self) -> bool:
        return (not self.est.rudder_ok) or (self.degraded and self.cfg.assume_degraded_on_fault)

    # ----------------------------------------------------------- initial plan
    def start(self) -> None:
        prompt = build_prompt(None, self._task_for_prompt(), initial=True)
        self.emit(0.0, "scheduler", "reasoner", MsgType.PLANNING_REQUEST,
                  bus.PlanningRequest("initial", 0, (), (), prompt.text), "c0a0")
        diag: list[str] = []
        err = ""
        try:
            raw = self.reasoner.generate(prompt)
            theta = parse_symbolic(raw, self.parse_limits, diag)
        except (RetryableReasonerError, ParseError) as exc:
            # fall back to the configured mission plan
            err = f"{type(exc).__name__}: {exc}"
            table = self.cfg.strategy
            wps = list(table.initial_corners)
            theta = StrategyTheta(table.initial_radius, table.initial_speed, wps, 0.0)
            raw = serialize(theta)
            diag.append("initial plan taken from the scenario configuration")
        self.emit(0.0, "reasoner", "scheduler", MsgType.STRATEGY,
                  bus.StrategyMsg(raw, serialize(theta), err, tuple(diag), 0.0), "c0a0")
        self.plan = build_plan(theta, self.cfg.thresholds.r_acc, self.cfg.guidance.plan_spacing)
        first = theta.waypoints_new
        if len(first) >= 2 and self.mode == "heading_hold":
            a, b = first[0], first[1]
            self.hold_on_heading = math.atan2(b[1] - a[1], b[0] - a[0])

    # ---------------------------------------------------------------- pipeline
    def _latency_ticks(self, seconds: float) -> int:
        return max(1, int(math.ceil(seconds / self.dt - 1e-9)))

    def _request(self, cyc: Cycle, k: int, t: float) -> None:
        ctx = cyc.ctx
        ctx.retry_index = cyc.attempt
        E = cyc.history[-1] if cyc.history else frozenset()
        mem = self.memory.context(ctx.violation_labels, self.cfg.strategy.kind)
        prompt = build_prompt(ctx, self._task_for_prompt(), mem, E, tuple(cyc.history))
        cyc.prompt = prompt
        cyc.phase = "reason"
        cyc.raw, cyc.error, cyc.theta, cyc.verdict = None, "", None, None
        self.emit(t, "scheduler", "reasoner", MsgType.PLANNING_REQUEST,
                  bus.PlanningRequest("replan", cyc.attempt, tuple(sorted(E)),
                                      tuple(sorted(ctx.violation_labels)), prompt.text), cyc.corr)
        if self.endpoint:
            cyc.t_sent = time.perf_counter()
            cyc.future = self.executor.submit(self.reasoner.generate, prompt)
        else:
            try:
                cyc.raw = self.reasoner.generate(prompt)
            except RetryableReasonerError as exc:
                cyc.error = f"RetryableReasonerError: {exc}"
            cyc.due = k + self._latency_ticks(self.cfg.timing.reasoner_latency)

    def _start_cycle(self, k: int, t: float, labels) -> None:
        self.cycles += 1
        ctx = assemble_context(self.est.state(), self.plan, self.memory.context(labels, self.cfg.strategy.kind),
                               labels, t)
        self.cycle = Cycle(self.cycles, ctx)
        self._request(self.cycle, k, t)

    @property
    def in_flight(self) -> bool:
        return self.cycle is not None and self.cycle.future is not None and not self.cycle.future.done()

    def _poll(self, k: int, t: float) -> None:
        cyc = self.cycle
        if cyc is None:
            return
        if cyc.phase == "reason":
            if self.endpoint:
                if cyc.future is None or not cyc.future.done():
                    return
                latency = time.perf_counter() - cyc.t_sent
                try:
                    cyc.raw = cyc.future.result()
                except RetryableReasonerError as exc:
                    cyc.error = f"RetryableReasonerError: {exc}"
                cyc.future = None
            else:
                if k < cyc.due:
                    return
                latency = self.cfg.timing.reasoner_latency
            diag: list[str] = []
            if cyc.raw is not None and not cyc.error:
                try:
                    cyc.theta = parse_symbolic(cyc.raw, self.parse_limits, diag)
                    self.memory.record(cyc.prompt.text, cyc.theta)
                except ParseError as exc:
                    cyc.error = f"ParseError: {exc}"
            self.emit(t, "reasoner", "solver", MsgType.STRATEGY,
                      bus.StrategyMsg(cyc.raw or "", serialize(cyc.theta) if cyc.theta else "",
                                      cyc.error, tuple(diag), round(latency, 6)), cyc.corr)
            if cyc.theta is not None:
                cyc.verdict = verify(cyc.theta, self.area, self.limits, not self._solver_rudder_fault())
            else:
                cyc.verdict = SolverVerdict(False, frozenset({SCHEMA}), {SCHEMA: [cyc.error]})
            cyc.phase = "verify"
            cyc.due = k + self._latency_ticks(self.cfg.timing.solver_latency)
            return
        if k < cyc.due:
            return
        verdict = cyc.verdict
        details = dict(verdict.details)
        admitted = []
        if cyc.theta is not None:
            for a in cyc.theta.extra_actions:
                ok = admit_extra_action(a, self.limits.delta_max)
                admitted.append({"kind": a.kind.value, "params": list(a.params), "admitted": ok})
        details["extra_actions"] = admitted
        self.emit(t, "solver", "scheduler", MsgType.VERIFICATION_RESULT,
                  bus.VerificationResult(verdict.passed, tuple(sorted(verdict.violations)),
                                         verdict.checks_passed,
                                         json.dumps(_jsonable(details), sort_keys=True,
                                                    separators=(",", ":")),
                                         self.cfg.timing.solver_latency), cyc.corr)
        action = decide(verdict, cyc.attempt, self.cfg.n_max, self.est.psi, self.limits, cyc.theta)
        if isinstance(action, Dispatch):
            self._dispatch(action.theta, admitted, cyc, t)
        elif isinstance(action, HoldFallback):
            self.mode = "hold"
            self.hold_heading = action.heading
            self.source = CommandSource.HOLD_FALLBACK
            self.ctrl.reset()
            cmd = self.ctrl.command(0.0, action.speed, CommandSource.HOLD_FALLBACK)
            self.command = cmd
            self._emit_command(t, cmd, cyc.corr)
            self.perception.release()
            self.cycle = None
        else:
            cyc.history.append(action.violations)
            cyc.attempt += 1
            self._request(cyc, k, t)

    def _dispatch(self, theta: StrategyTheta, admitted, cyc: Cycle, t: float) -> None:
        for a, info in zip(theta.extra_actions, admitted):
            if not info["admitted"]:
                continue
            if a.kind is ActionKind.RUDDER_BIAS:
                self.ctrl.bias = a.bias
            elif a.kind is ActionKind.KF_COVARIANCE_SCALE and self.cfg.estimator.apply_kf_scale:
                self.est.rescale(a.params)
        self.plan = build_plan(theta, self.cfg.thresholds.r_acc, self.cfg.guidance.plan_spacing)
        self.plan = join_plan(self.plan, self.est.pos)
        self.mode = "track"
        self.source = CommandSource.REPLANNED
        self.replanned = True
        self.ctrl.reset()
        self.memory.record_recovery(
            cyc.ctx.violation_labels, self.cfg.strategy.kind, theta,
            f"R={theta.R_new:g} m u={theta.u_new:.4f} m/s after {cyc.attempt + 1} attempt(s)", t)
        self.perception.release()
        self.cycle = None
        psi_des = self._desired_heading()
        e_psi = wrap_angle(psi_des - self.est.psi)
        self.command = self.ctrl.command(e_psi, self._speed(), CommandSource.REPLANNED)
        self._emit_command(t, self.command, cyc.corr)

    def _emit_command(self, t: float, cmd: ControlCommand, corr: str = "") -> None:
        self.emit(t, "guidance", "vehicle", MsgType.CONTROL_COMMAND,
                  bus.ControlCommandMsg(cmd.rudder_cmd, cmd.speed_setpoint, cmd.rudder_bias,
                                        cmd.source.value), corr)

    # ---------------------------------------------------------------- guidance
    def _desired_heading(self) -> float:
        if self.mode == "hold":
            return self.hold_heading
        if self.mode == "heading_hold":
            return self.hold_on_heading
        self.psi_des = los_heading(self.est.pos, self.plan.target, self.psi_des)
        return self.psi_des

    def _speed(self) -> float:
        if self.mode == "hold":
            return self.limits.u_min
        return speed_setpoint(self.plan.current_speed, self.degraded, self.limits)

    def _state_message(self, rep: SensorReport, t: float, res) -> None:
        e = self.last_e
        labels = tuple(sorted(res.labels)) if res is not None else ()
        self.emit(t, "perception", "scheduler", MsgType.STATE_DATA,
                  bus.StateMessage(self.est.state(), e[0], e[1], self.est.rudder_ok, t,
                                   self.plan.active_index, self.complete, self.last_alpha,
                                   self.perception.latched, labels, rep.truth))

    def on_report(self, rep: SensorReport) -> ActuatorFrame:
        k = rep.tick
        t = round(k * self.dt, 9)
        self.t, self.tick = t, k
        if rep.measurement is not None:
            self.est.measure(rep.measurement, rep.dvl, t)
        if self.mode != "hold" and not self.complete:
            self.plan = advance_waypoint(self.plan, self.est.pos)
            if self.plan.complete or rep.done:
                self.complete = True
        elif rep.done:
            self.complete = True
        psi_des = self._desired_heading()
        slow = k % self.slow_every == 0
        res = None
        if slow or self.complete:
            res = self.perception.evaluate(self.est.pos, self.est.psi, psi_des,
                                           self.plan.polyline, self.est.rudder_ok)
            self.last_e = (res.errors.e_p, res.errors.e_psi)
            self.last_alpha = res.alpha
            if res.confirmed:
                self.degraded = self.degraded or self.cfg.assume_degraded_on_fault
            self._state_message(rep, t, res)
            if res.rising and self.cycle is None and not self.complete:
                self._start_cycle(k, t, res.labels)
        if not self.complete:
            self._poll(k, t)
        psi_des = self._desired_heading()
        e_psi = wrap_angle(psi_des - self.est.psi)
        if self.complete:
            cmd = ControlCommand(0.0, 0.0, self.ctrl.bias, self.source)
        else:
            cmd = self.ctrl.command(e_psi, self._speed(), self.source)
        self.command = cmd
        if slow:
            self._emit_command(t, cmd)
        self.steps.append(StepRecord(t, rep.truth, rep.measurement, self.est.state(),
                                     self.last_e[0], e_psi, cmd, self.mode,
                                     self.perception.latched, self.plan.active_index))
        self.est.dead_reckon(self.dt, cmd.total_rudder)
        depth = self.plan.target_depth if self.mode != "hold" else None
        return ActuatorFrame(k, cmd.total_rudder, cmd.speed_setpoint, depth, self.replanned)

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=False, cancel_futures=True)
