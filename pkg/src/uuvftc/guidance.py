"""Fast-loop guidance: LOS heading, PD rudder, speed setpoint, waypoint
switching, and the dispatch / retry / hold decision."""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .geometry import ConfigurationError, wrap_angle
from .reasoner.strategy import StrategyTheta
from .solver import SolverLimits, SolverVerdict


class CommandSource(enum.Enum):
    TRACK = "Track"
    REPLANNED = "Replanned"
    HOLD_FALLBACK = "HoldFallback"


@dataclass(frozen=True)
class ControlCommand:
    rudder_cmd: float
    speed_setpoint: float
    rudder_bias: float = 0.0
    source: CommandSource = CommandSource.TRACK

    @property
    def total_rudder(self) -> float:
        return self.rudder_cmd + self.rudder_bias


@dataclass(frozen=True)
class WaypointPlan:
    """Tracking points with per-segment radius and speed.

    ``waypoints`` is an (n, 2) or (n, 3) array; column 2, when present, is the
    depth to hold while heading for that point. ``radius[k]`` and ``speed[k]``
    belong to the segment ending at waypoint k.
    """

    waypoints: np.ndarray
    radius: np.ndarray
    speed: np.ndarray
    r_acc: float
    active_index: int = 0
    complete: bool = False

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        n = len(W)
        R = np.broadcast_to(np.asarray(self.radius, dtype=float), (n,)).copy()
        U = np.broadcast_to(np.asarray(self.speed, dtype=float), (n,)).copy()
        if n < 1 or not (0 <= self.active_index < n):
            raise ConfigurationError("active_index out of range")
        if np.any(R <= 0) or np.any(U <= 0) or self.r_acc <= 0:
            raise ConfigurationError("radius, speed and r_acc must be positive")
        object.__setattr__(self, "waypoints", W)
        object.__setattr__(self, "radius", R)
        object.__setattr__(self, "speed", U)

    @property
    def target(self) -> np.ndarray:
        return self.waypoints[self.active_index]

    @property
    def current_speed(self) -> float:
        return float(self.speed[self.active_index])

    @property
    def target_depth(self) -> float | None:
        return float(self.target[2]) if self.waypoints.shape[1] > 2 else None

    @property
    def polyline(self) -> np.ndarray:
        return self.waypoints[:, :2]


def los_heading(est_pos: Sequence[float], target: Sequence[float], previous: float | None = None) -> float:
    dx = float(target[0]) - float(est_pos[0])
    dy = float(target[1]) - float(est_pos[1])
    if dx == 0.0 and dy == 0.0:
        if previous is None:
            raise ConfigurationError("LOS target coincides with the vehicle and no previous heading")
        return previous
    return wrap_angle(math.atan2(dy, dx))


def pd_rudder(e_psi: float, e_psi_dot: float, Kp: float, Kd: float, delta_max: float) -> float:
    if Kp < 0 or Kd < 0:
        raise ConfigurationError("gains must be non-negative")
    return float(np.clip(Kp * e_psi + Kd * e_psi_dot, -delta_max, delta_max))


def speed_setpoint(plan_speed: float, fault_active: bool, limits: SolverLimits) -> float:
    cap = limits.u_max_fault if fault_active else limits.u_max
    return min(plan_speed, cap)


def advance_waypoint(plan: WaypointPlan, est_pos: Sequence[float]) -> WaypointPlan:
    if plan.complete:
        return plan
    tgt = plan.target
    if math.hypot(est_pos[0] - tgt[0], est_pos[1] - tgt[1]) < plan.r_acc:
        if plan.active_index + 1 >= len(plan.waypoints):
            return replace(plan, complete=True)
        return replace(plan, active_index=plan.active_index + 1)
    return plan


def join_plan(plan: WaypointPlan, est_pos: Sequence[float]) -> WaypointPlan:
    """Start tracking a freshly dispatched plan at its nearest point."""
    d = np.hypot(plan.waypoints[:, 0] - est_pos[0], plan.waypoints[:, 1] - est_pos[1])
    return advance_waypoint(replace(plan, active_index=int(np.argmin(d))), est_pos)


class HeadingController:
    """PD heading loop with a median-filtered backward-difference derivative.

    An admitted rudder bias is added after the PD term and before the final
    clip, so ``rudder_cmd + bias`` never leaves the deflection range.
    """

    def __init__(self, Kp: float = 1.2, Kd: float = 0.4, delta_max: float = math.radians(60.0),
                 dt: float = 0.05):
        self.Kp, self.Kd, self.delta_max, self.dt = Kp, Kd, delta_max, dt
        self.raw: deque[float] = deque(maxlen=3)
        self.prev_filtered: float | None = None
        self.bias = 0.0

    def reset(self) -> None:
        self.raw.clear()
        self.prev_filtered = None

    def derivative(self, e_psi: float) -> float:
        if self.raw:
            # keep the history continuous across the +/-pi seam
            e_psi = self.raw[-1] + wrap_angle(e_psi - self.raw[-1])
        self.raw.append(e_psi)
        filt = float(np.median(self.raw))
        d = 0.0 if self.prev_filtered is None else (filt - self.prev_filtered) / self.dt
        self.prev_filtered = filt
        return d

    def command(self, e_psi: float, speed: float,
                source: CommandSource = CommandSource.TRACK) -> ControlCommand:
        e_dot = self.derivative(e_psi)
        pd = self.Kp * e_psi + self.Kd * e_dot
        total = float(np.clip(pd + self.bias, -self.delta_max, self.delta_max))
        return ControlCommand(total - self.bias, speed, self.bias, source)


@dataclass(frozen=True)
class Dispatch:
    theta: StrategyTheta


@dataclass(frozen=True)
class Retry:
    violations: frozenset[str]


@dataclass(frozen=True)
class HoldFallback:
    heading: float
    speed: float


ControlAction = Union[Dispatch, Retry, HoldFallback]


def decide(verdict: SolverVerdict, retry_count: int, n_max: int, est_heading: float,
           limits: SolverLimits, theta: StrategyTheta | None = None) -> ControlAction:
    if verdict.passed:
        if theta is None:
            raise ConfigurationError("a passing verdict needs the strategy to dispatch")
        return Dispatch(theta)
    if retry_count < n_max:
        return Retry(verdict.violations)
    return HoldFallback(est_heading, limits.u_min)


@dataclass
class GuidanceOutput:
    command: ControlCommand
    psi_des: float
    e_psi: float
    plan: WaypointPlan = field(repr=False)
