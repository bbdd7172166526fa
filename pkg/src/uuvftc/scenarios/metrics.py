"""Run metrics recomputed from a transcript alone."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..bus import MsgType, TypedMessage
from ..perception import CROSS_TRACK
from ..reasoner.strategy import parse_symbolic


@dataclass(frozen=True)
class RunMetrics:
    e_p_max: float
    fault_raised: bool
    detection_time: float | None
    first_exceed_time: float | None
    detection_cycles: int | None
    solver_invocations: int
    first_attempt_pass: bool | None
    first_attempt_checks: int | None
    first_proposal_radius: float | None
    first_proposal_speed: float | None
    mission_completed: bool
    peak_lateral_err: float
    time_to_trigger: float | None
    hold_engaged: bool
    replans: int
    duration: float

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(messages: list[TypedMessage]) -> RunMetrics:
    states = [m.payload for m in messages if m.msg_type is MsgType.STATE_DATA]
    verdicts = [m.payload for m in messages if m.msg_type is MsgType.VERIFICATION_RESULT]
    commands = [m.payload for m in messages if m.msg_type is MsgType.CONTROL_COMMAND]
    replan_strats = []
    replan_corr = {m.corr_id for m in messages if m.msg_type is MsgType.PLANNING_REQUEST
                   and m.payload.kind == "replan"}
    for m in messages:
        if m.msg_type is MsgType.STRATEGY and m.corr_id in replan_corr and m.payload.theta:
            replan_strats.append(m.payload.theta)

    e_p_max = max((s.e_p for s in states), default=0.0)
    confirmed = [s for s in states if s.confirmed]
    exceed = [s for s in states if CROSS_TRACK in s.labels]
    detection = confirmed[0].t if confirmed else None
    first_exceed = exceed[0].t if exceed else None
    cycles = None
    if detection is not None and first_exceed is not None:
        cycles = sum(1 for s in states if first_exceed < s.t <= detection)

    lateral = 0.0
    if states and states[0].truth is not None:
        psi0 = states[0].truth.psi
        nx, ny = -math.sin(psi0), math.cos(psi0)
        for s in states:
            if s.truth is not None:
                err = (s.est_state.x - s.truth.x) * nx + (s.est_state.y - s.truth.y) * ny
                lateral = max(lateral, abs(err))

    R = u = None
    if replan_strats:
        first = parse_symbolic(replan_strats[0])
        R, u = first.R_new, first.u_new
    return RunMetrics(
        e_p_max=e_p_max,
        fault_raised=bool(confirmed),
        detection_time=detection,
        first_exceed_time=first_exceed,
        detection_cycles=cycles,
        solver_invocations=len(verdicts),
        first_attempt_pass=verdicts[0].passed if verdicts else None,
        first_attempt_checks=verdicts[0].checks_passed if verdicts else None,
        first_proposal_radius=R,
        first_proposal_speed=u,
        mission_completed=bool(states and states[-1].mission_complete),
        peak_lateral_err=lateral,
        time_to_trigger=detection,
        hold_engaged=any(c.source == "HoldFallback" for c in commands),
        replans=sum(1 for v in verdicts if v.passed),
        duration=states[-1].t if states else 0.0,
    )
