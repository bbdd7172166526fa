"""Replanning strategy schema, its text form and the symbolic parser."""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

from ..geometry import KNOT


class ParseError(ValueError):
    """Raw reasoner output could not be turned into a strategy."""


class ActionKind(enum.Enum):
    RUDDER_BIAS = "rudder_bias"
    KF_COVARIANCE_SCALE = "kf_scale"


@dataclass(frozen=True)
class OutOfSchemaAction:
    kind: ActionKind
    params: tuple[float, ...]

    @classmethod
    def rudder_bias(cls, bias: float) -> "OutOfSchemaAction":
        return cls(ActionKind.RUDDER_BIAS, (float(bias),))

    @classmethod
    def kf_scale(cls, f_q: float, f_gps: float, f_dvl: float) -> "OutOfSchemaAction":
        return cls(ActionKind.KF_COVARIANCE_SCALE, (float(f_q), float(f_gps), float(f_dvl)))

    @property
    def bias(self) -> float:
        return self.params[0]


@dataclass(frozen=True)
class StrategyTheta:
    R_new: float
    u_new: float
    waypoints_new: tuple[tuple[float, ...], ...]
    psi_ret: float
    extra_actions: tuple[OutOfSchemaAction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "waypoints_new",
                           tuple(tuple(float(c) for c in w) for w in self.waypoints_new))
        object.__setattr__(self, "extra_actions", tuple(self.extra_actions))

    def schema_problems(self) -> list[str]:
        """Reasons this strategy is not well formed (empty list when fine)."""
        out = []
        for name in ("R_new", "u_new", "psi_ret"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                out.append(f"{name} is not a finite number")
        if not self.waypoints_new:
            out.append("waypoints_new is empty")
        for w in self.waypoints_new:
            if len(w) not in (2, 3) or not all(math.isfinite(c) for c in w):
                out.append(f"bad waypoint {w}")
        if not out and (self.R_new <= 0.0 or self.u_new <= 0.0):
            out.append("radius and speed must be positive")
        for a in self.extra_actions:
            if not all(math.isfinite(p) for p in a.params):
                out.append(f"non-finite parameters in {a.kind.value}")
        return out

    def actions(self, kind: ActionKind) -> list[OutOfSchemaAction]:
        return [a for a in self.extra_actions if a.kind is kind]


@dataclass(frozen=True)
class ParseLimits:
    """Upper clip bounds applied by the parser."""

    u_max: float = 10.0 * KNOT
    r_max: float = 1000.0


MANDATORY = ("radius", "speed", "waypoints", "return_heading")
_KEYS = re.compile(r"\b(radius|speed|waypoints|return_heading|extra)\s*:", re.IGNORECASE)
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VALUE = re.compile(rf"^\s*({_NUM})\s*([A-Za-z/°]*)\s*$")
_POINT = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*(?:,\s*({_NUM})\s*)?\)")


def _fmt(v: float) -> str:
    return repr(float(v))


def serialize(theta: StrategyTheta) -> str:
    """Canonical text form; SI units so parsing it back is exact."""
    pts = ";".join("(" + ",".join(_fmt(c) for c in w) + ")" for w in theta.waypoints_new)
    lines = [f"radius: {_fmt(theta.R_new)} m",
             f"speed: {_fmt(theta.u_new)} m/s",
             f"waypoints: {pts}",
             f"return_heading: {_fmt(theta.psi_ret)} rad"]
    for a in theta.extra_actions:
        if a.kind is ActionKind.RUDDER_BIAS:
            lines.append(f"extra: rudder_bias {_fmt(a.bias)} rad")
        else:
            lines.append("extra: kf_scale " + " ".join(_fmt(p) for p in a.params))
    return "\n".join(lines) + "\n"


def _fields(raw: str) -> list[tuple[str, str]]:
    hits = list(_KEYS.finditer(raw))
    out = []
    for i, m in enumerate(hits):
        end = hits[i + 1].start() if i + 1 < len(hits) else len(raw)
        value = raw[m.end():end].strip().rstrip(",;").strip()
        out.append((m.group(1).lower(), value))
    return out


def _scalar(key: str, text: str) -> tuple[float, str]:
    m = _VALUE.match(text)
    if not m:
        raise ParseError(f"{key}: expected a number with optional unit, got {text!r}")
    return float(m.group(1)), m.group(2).lower()


def _length(text: str) -> float:
    v, unit = _scalar("radius", text)
    if unit not in ("", "m"):
        raise ParseError(f"radius: unsupported unit {unit!r}")
    return v


def _speed(text: str) -> float:
    v, unit = _scalar("speed", text)
    if unit in ("kn", "kt", "kts", "knot", "knots"):
        return v * KNOT
    if unit in ("", "m/s", "mps"):
        return v
    raise ParseError(f"speed: unsupported unit {unit!r}")


def _angle(key: str, text: str) -> float:
    v, unit = _scalar(key, text)
    if unit in ("deg", "degree", "degrees", "°"):
        return math.radians(v)
    if unit in ("", "rad"):
        return v
    raise ParseError(f"{key}: unsupported unit {unit!r}")


def _waypoints(text: str) -> tuple[tuple[float, ...], ...]:
    pts = []
    for m in _POINT.finditer(text):
        pts.append(tuple(float(g) for g in m.groups() if g is not None))
    leftover = _POINT.sub("", text).replace(";", "").replace(",", "").strip()
    if not pts or leftover:
        raise ParseError(f"waypoints: cannot read {text!r}")
    return tuple(pts)


def _extra(text: str) -> OutOfSchemaAction:
    name, _, rest = text.strip().partition(" ")
    name = name.strip().lower()
    if "(" in name:
        name, _, tail = name.partition("(")
        rest = tail + " " + rest
    rest = rest.replace("(", " ").replace(")", " ").replace(",", " ").strip()
    if name == "rudder_bias":
        return OutOfSchemaAction.rudder_bias(_angle("rudder_bias", rest))
    if name == "kf_scale":
        parts = rest.split()
        if len(parts) != 3:
            raise ParseError("kf_scale needs three factors")
        try:
            return OutOfSchemaAction.kf_scale(*(float(p) for p in parts))
        except ValueError:
            raise ParseError(f"kf_scale: non-numeric factor in {rest!r}") from None
    raise ParseError(f"unknown extra action {name!r}")


def parse_symbolic(raw: str, limits: ParseLimits | None = None,
                   diagnostics: list[str] | None = None) -> StrategyTheta:
    """Turn the reasoner's key-value text into a typed strategy.

    Accepts one field per line or comma-separated fields on one line. Speeds
    in kn or m/s, angles in deg or rad. Radius and speed above the configured
    bounds are clipped and a note is appended to ``diagnostics``.
    """
    limits = limits or ParseLimits()
    diag = diagnostics if diagnostics is not None else []
    got: dict[str, str] = {}
    extras = []
    for key, value in _fields(raw):
        if key == "extra":
            extras.append(_extra(value))
        elif key in got:
            raise ParseError(f"duplicate field {key!r}")
        else:
            got[key] = value
    missing = [k for k in MANDATORY if k not in got]
    if missing:
        raise ParseError(f"missing mandatory field(s): {', '.join(missing)}")

    R = _length(got["radius"])
    u = _speed(got["speed"])
    if R <= 0.0 or u <= 0.0:
        raise ParseError("radius and speed must be positive")
    if R > limits.r_max:
        diag.append(f"clip: radius {R:g} m -> {limits.r_max:g} m")
        R = limits.r_max
    if u > limits.u_max:
        diag.append(f"clip: speed {u:g} m/s -> {limits.u_max:g} m/s")
        u = limits.u_max
    theta = StrategyTheta(R, u, _waypoints(got["waypoints"]),
                          _angle("return_heading", got["return_heading"]), tuple(extras))
    problems = theta.schema_problems()
    if problems:
        raise ParseError("; ".join(problems))
    return theta


def admit_extra_action(action: OutOfSchemaAction, delta_max: float, scale_max: float = 100.0) -> bool:
    """Parameter-bound check for actions outside the geometric schema."""
    if action.kind is ActionKind.RUDDER_BIAS:
        return math.isfinite(action.bias) and abs(action.bias) <= delta_max
    return all(math.isfinite(f) and 0.0 < f <= scale_max for f in action.params)
