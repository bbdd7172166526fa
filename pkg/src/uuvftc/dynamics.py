"""Three-degree-of-freedom kinematic truth model with injectable faults."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .geometry import ConfigurationError, wrap_angle


class ModelError(RuntimeError):
    """Non-finite or out-of-contract input to the truth model."""


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    psi: float
    u: float
    d: float = 0.0
    rudder_ok: bool = True


@dataclass(frozen=True)
class TruthAugmentation:
    v: float = 0.0
    r: float = 0.0
    current_lateral: float = 0.0
    steering_locked: bool = False
    cum_dive: float = 0.0


class FaultKind(enum.Enum):
    NONE = "none"
    LOWER_RUDDER_REMOVED = "lower_rudder_removed"
    STEERING_LOCK = "steering_lock"
    CROSS_CURRENT = "cross_current"
    DVL_BIAS = "dvl_bias"


FAULT_DEFAULTS: dict[FaultKind, dict[str, float]] = {
    FaultKind.NONE: {},
    FaultKind.LOWER_RUDDER_REMOVED: {"r_min_fault": 10.0, "health_signal": 0.0},
    FaultKind.STEERING_LOCK: {"dd_max": 0.2, "dd_unlock": 0.2, "dive_enabled": 1.0},
    FaultKind.CROSS_CURRENT: {"current_speed": 0.3},
    FaultKind.DVL_BIAS: {"bias": 0.8, "sigma": 0.5, "trigger_step": 15},
}


@dataclass(frozen=True)
class FaultInjection:
    kind: FaultKind = FaultKind.NONE
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        missing = set(FAULT_DEFAULTS[self.kind]) - set(self.params)
        if missing:
            raise ConfigurationError(
                f"fault {self.kind.value} is missing parameters: {sorted(missing)}")
        for k, val in self.params.items():
            if not math.isfinite(float(val)):
                raise ConfigurationError(f"fault parameter {k} is not finite")

    @classmethod
    def default(cls, kind: FaultKind | str, **overrides: float) -> "FaultInjection":
        kind = FaultKind(kind)
        return cls(kind, {**FAULT_DEFAULTS[kind], **overrides})

    def __getitem__(self, key: str) -> float:
        return self.params[key]


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters of the truth model.

    ``delta_max_eff`` limits the usable rudder deflection (lower-rudder loss);
    ``nominal_heading`` orients the cross-current, which pushes to port of it.
    """

    length: float = 1.83
    delta_max: float = math.radians(60.0)
    delta_max_eff: float | None = None
    tau_u: float = 1.0
    v_bound: float = 0.0
    nominal_heading: float = 0.0

    @property
    def active_delta_max(self) -> float:
        return self.delta_max if self.delta_max_eff is None else min(self.delta_max, self.delta_max_eff)

    @property
    def min_radius(self) -> float:
        return self.length / (2.0 * math.sin(self.active_delta_max))

    @classmethod
    def with_fault(cls, fault: FaultInjection, **kw) -> "VehicleParams":
        p = cls(**kw)
        if fault.kind is FaultKind.LOWER_RUDDER_REMOVED:
            eff = math.asin(p.length / (2.0 * fault["r_min_fault"]))
            p = replace(p, delta_max_eff=eff)
        return p


def yaw_rate(u: float, rudder_cmd: float, params: VehicleParams) -> float:
    """Turn rate from the inverted turning-circle geometry R = L / (2 sin|delta|)."""
    if rudder_cmd == 0.0 or u == 0.0:
        return 0.0
    delta = min(abs(rudder_cmd), params.active_delta_max)
    radius = max(params.length / (2.0 * math.sin(delta)), params.min_radius)
    return math.copysign(u / radius, rudder_cmd)


def step_kinematics(state: VehicleState, aug: TruthAugmentation, rudder_cmd: float,
                    speed_setpoint: float, dt: float,
                    params: VehicleParams = VehicleParams()) -> tuple[VehicleState, TruthAugmentation]:
    """Advance the truth state by one explicit-Euler step."""
    vals = (state.x, state.y, state.psi, state.u, state.d, aug.v, aug.current_lateral,
            rudder_cmd, speed_setpoint, dt)
    if not all(math.isfinite(v) for v in vals):
        raise ModelError(f"non-finite input to step_kinematics: {vals}")
    if dt <= 0.0:
        raise ModelError("dt must be positive")
    if abs(rudder_cmd) > params.delta_max + 1e-9:
        raise ModelError(f"rudder command {rudder_cmd:.4f} rad exceeds +/-{params.delta_max:.4f}")

    v = aug.v
    if params.v_bound > 0.0:
        v = max(-params.v_bound, min(params.v_bound, v))
    else:
        v = 0.0
    r = 0.0 if aug.steering_locked else yaw_rate(state.u, rudder_cmd, params)
    c, s = math.cos(state.psi), math.sin(state.psi)
    x = state.x + (state.u * c - v * s) * dt
    y = state.y + (state.u * s + v * c) * dt
    if aug.current_lateral != 0.0:
        h = params.nominal_heading
        x += -aug.current_lateral * math.sin(h) * dt
        y += aug.current_lateral * math.cos(h) * dt
    psi = wrap_angle(state.psi + r * dt)
    u = state.u + (speed_setpoint - state.u) * min(1.0, dt / params.tau_u)
    new_state = replace(state, x=x, y=y, psi=psi, u=max(0.0, u))
    return new_state, replace(aug, v=v, r=r)


def step_depth(state: VehicleState, target: float | None, max_rate: float, dt: float) -> VehicleState:
    """Rate-limited depth tracking; ``None`` holds depth."""
    if target is None or max_rate <= 0.0:
        return state
    delta = max(-max_rate * dt, min(max_rate * dt, target - state.d))
    return replace(state, d=max(0.0, state.d + delta))


def apply_steering_lock(state: VehicleState, aug: TruthAugmentation, replanned: bool,
                        fault: FaultInjection) -> tuple[VehicleState, TruthAugmentation]:
    """One report cycle of the dive-to-unlock mechanism."""
    if fault.kind is not FaultKind.STEERING_LOCK:
        return state, replace(aug, steering_locked=False)
    if not aug.steering_locked or not replanned:
        return state, aug
    if not fault["dive_enabled"]:
        return state, replace(aug, steering_locked=False)
    unlock = fault["dd_unlock"]
    step = min(fault["dd_max"], unlock - aug.cum_dive)
    cum = aug.cum_dive + step
    new_state = replace(state, d=state.d + step)
    return new_state, replace(aug, cum_dive=cum, steering_locked=cum < unlock - 1e-12)
