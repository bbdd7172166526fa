"""Prompt engine: four fixed sections rendered deterministically."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..dynamics import VehicleState

ROLE = ("You are the replanning module of an unmanned underwater vehicle. "
        "Propose a recovery trajectory that the vehicle can physically execute.")

OUTPUT_FORMAT = (
    "Answer with exactly these key-value lines:\n"
    "radius: <metres> m\n"
    "speed: <value> kn|m/s\n"
    "waypoints: (x,y[,depth]);(x,y[,depth]);...\n"
    "return_heading: <value> deg|rad\n"
    "extra: rudder_bias <value> deg|rad   (optional, repeatable)\n"
    "extra: kf_scale <f_q> <f_gps> <f_dvl>   (optional)")

FIRST_ABNORMALITY = "detected navigation deviation"


@dataclass(frozen=True)
class MissionTask:
    """What the scripted and remote reasoners need to know about the mission."""

    scenario: str
    kind: str
    goal: tuple[float, ...]
    plan_radius: float
    plan_speed: float
    area_vertices: tuple[tuple[float, float], ...] = ()
    d_safe: float = 0.0
    u_min: float = 0.0
    u_max: float = 0.0
    r_min: float = 0.0


@dataclass(frozen=True)
class PromptContext:
    role_section: str
    state_section: str
    task_constraints_section: str
    abnormality_section: str
    violation_labels: frozenset[str] = frozenset()
    retry_index: int = 0
    # structured copies of what the text says, for the scripted planner
    est_state: VehicleState | None = None
    task: MissionTask | None = None
    violation_history: tuple[frozenset[str], ...] = ()
    labels: frozenset[str] = frozenset()
    initial: bool = False
    t: float = 0.0

    @property
    def text(self) -> str:
        return (f"## ROLE\n{self.role_section}\n\n"
                f"## STATE\n{self.state_section}\n\n"
                f"## TASK AND CONSTRAINTS\n{self.task_constraints_section}\n\n"
                f"## ABNORMALITY\n{self.abnormality_section}\n")


def _state_text(s: VehicleState | None, t: float, labels, memory_lines) -> str:
    lines = [f"time: {t:.2f} s"]
    if s is not None:
        lines.append(f"position: ({s.x:.2f}, {s.y:.2f}) m, depth {s.d:.2f} m")
        lines.append(f"heading: {math.degrees(s.psi):.1f} deg, speed {s.u:.3f} m/s")
        lines.append(f"rudder health: {'ok' if s.rudder_ok else 'FAULT'}")
    if labels:
        lines.append("perception flags: " + ", ".join(sorted(labels)))
    if memory_lines:
        lines.append("memory:")
        lines.extend(f"  {m}" for m in memory_lines)
    return "\n".join(lines)


def _task_text(task: MissionTask | None) -> str:
    if task is None:
        return OUTPUT_FORMAT
    goal = ", ".join(f"{g:.2f}" for g in task.goal)
    area = ";".join(f"({x:g},{y:g})" for x, y in task.area_vertices)
    return (f"scenario: {task.scenario}\n"
            f"goal: ({goal})\n"
            f"planned radius {task.plan_radius:g} m, planned speed {task.plan_speed:.4f} m/s\n"
            f"navigable area: {area}, safety margin {task.d_safe:g} m\n"
            f"speed envelope: [{task.u_min:g}, {task.u_max:.4f}] m/s; "
            f"minimum turning radius now {task.r_min:.3f} m\n"
            + OUTPUT_FORMAT)


def build_prompt(ctx, task: MissionTask | None, memory_lines=(), violations=(),
                 violation_history=(), initial: bool = False) -> PromptContext:
    """Render the prompt for one reasoner call.

    ``ctx`` is a perception context package (or ``None`` at mission start).
    Violated constraint labels from the previous attempt are named verbatim.
    """
    E = frozenset(violations)
    est = getattr(ctx, "est_state", None)
    t = float(getattr(ctx, "t", 0.0))
    labels = frozenset(getattr(ctx, "violation_labels", ()))
    retry = int(getattr(ctx, "retry_index", 0))
    if initial:
        abn = "none (mission start): generate the initial trajectory plan"
    elif not E:
        abn = FIRST_ABNORMALITY
    else:
        abn = (FIRST_ABNORMALITY + "\n"
               + f"previous proposal (attempt {retry}) was rejected by the solver; violated constraints:\n"
               + "\n".join(f"- {lbl}" for lbl in sorted(E))
               + "\ncorrect every listed constraint in the next proposal")
    return PromptContext(
        role_section=ROLE,
        state_section=_state_text(est, t, labels, list(memory_lines)),
        task_constraints_section=_task_text(task),
        abnormality_section=abn,
        violation_labels=E,
        retry_index=retry,
        est_state=est,
        task=task,
        violation_history=tuple(frozenset(v) for v in violation_history),
        labels=labels,
        initial=initial,
        t=t,
    )
