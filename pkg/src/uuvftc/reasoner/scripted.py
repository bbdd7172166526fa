"""Deterministic stand-in for a language-model planner.

Each scenario designates one recovery strategy. Retries adjust it from the
violation history alone, so the output is a pure function of the prompt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import ConfigurationError, turn_route, unit, wrap_angle
from .endpoint import RetryableReasonerError
from .prompt import PromptContext
from .strategy import OutOfSchemaAction, StrategyTheta, serialize

KINDS = ("turn_return", "dive_return", "straight_bias", "kf_rescale")


@dataclass(frozen=True)
class StrategyTable:
    kind: str
    radius: float
    speed: float
    target: tuple[float, ...] = (0.0, 0.0)
    turn_sign: int = 1
    forward: float = 0.0
    dive_depth: float = 0.0
    rudder_bias: float = 0.0
    kf_factors: tuple[float, float, float] = (1.0, 1.0, 1.0)
    first_radius: float | None = None
    initial_corners: tuple[tuple[float, ...], ...] = ()
    initial_radius: float = 1.0
    initial_speed: float = 1.0
    radius_growth: float = 1.25
    shrink: float = 0.9
    speed_backoff: float = 0.8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown strategy kind {self.kind!r}")


def _final_heading(wps) -> float:
    a, b = np.asarray(wps[-2][:2]), np.asarray(wps[-1][:2])
    return wrap_angle(math.atan2(b[1] - a[1], b[0] - a[0])) if np.any(a != b) else 0.0


def _designated(table: StrategyTable, prompt: PromptContext, R: float):
    s = prompt.est_state
    if s is None:
        raise ConfigurationError("replanning prompt carries no vehicle state")
    p = np.array([s.x, s.y])
    extras: list[OutOfSchemaAction] = []
    if table.kind == "turn_return":
        wps = [tuple(c) for c in turn_route(p, s.psi, R, table.target[:2], table.turn_sign)]
    elif table.kind == "dive_return":
        fwd = p + table.forward * unit(s.psi)
        corners = turn_route(fwd, s.psi, R, table.target[:2], table.turn_sign)
        dz = table.dive_depth
        tz = table.target[2] if len(table.target) > 2 else 0.0
        wps = [(p[0], p[1], dz)] + [(c[0], c[1], dz) for c in corners[:-1]]
        wps.append((corners[-1][0], corners[-1][1], tz))
    elif table.kind == "straight_bias":
        wps = [(p[0], p[1]), tuple(table.target[:2])]
        extras.append(OutOfSchemaAction.rudder_bias(table.rudder_bias))
    else:
        # the route stays; only the estimator is retuned
        wps = list(table.initial_corners)
        extras.append(OutOfSchemaAction.kf_scale(*table.kf_factors))
    return wps, extras


def scripted_generate(prompt: PromptContext, limits, area, table: StrategyTable) -> StrategyTheta:
    """Designated strategy for the scenario, corrected for past violations."""
    if prompt.initial:
        wps = list(table.initial_corners)
        return StrategyTheta(table.initial_radius, table.initial_speed, wps, _final_heading(wps))
    R = table.first_radius if table.first_radius is not None else table.radius
    u = table.speed
    shrinks = 0
    for E in prompt.violation_history:
        if "radius" in E:
            R = max(table.radius, table.radius_growth * R)
        if "speed" in E:
            u = min(max(u * table.speed_backoff, limits.u_min), limits.u_max)
        if "boundary" in E:
            shrinks += 1
    wps, extras = _designated(table, prompt, R)
    if shrinks:
        c = np.asarray(area.centroid)
        f = table.shrink ** shrinks
        moved = [wps[0]]
        for w in wps[1:]:
            xy = c + f * (np.asarray(w[:2]) - c)
            moved.append((xy[0], xy[1], *w[2:]))
        wps = moved
    return StrategyTheta(R, u, wps, _final_heading(wps), tuple(extras))


class ScriptedReasoner:
    """Reasoner interface over :func:`scripted_generate`; emits the same text
    a remote model would, so the parser sits on the path in every mode."""

    mode = "scripted"

    def __init__(self, table: StrategyTable, limits, area):
        self.table, self.limits, self.area = table, limits, area

    def generate(self, prompt: PromptContext) -> str:
        try:
            return serialize(scripted_generate(prompt, self.limits, self.area, self.table))
        except ConfigurationError as exc:
            raise RetryableReasonerError(f"no strategy for this state: {exc}") from exc
