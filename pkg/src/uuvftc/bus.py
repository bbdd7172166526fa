"""Typed message envelope and its line-delimited wire format.

One message is one JSON object on one line, keys in a fixed order, so a
transcript is both human-readable and byte-reproducible.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, fields
from typing import Any

from .dynamics import VehicleState


class DecodeError(ValueError):
    def __init__(self, reason: str, line: bytes | str):
        super().__init__(f"{reason}: {line!r}")
        self.reason = reason
        self.line = line


class MsgType(enum.Enum):
    STATE_DATA = "StateData"
    PLANNING_REQUEST = "PlanningRequest"
    STRATEGY = "Strategy"
    VERIFICATION_RESULT = "VerificationResult"
    CONTROL_COMMAND = "ControlCommand"


@dataclass(frozen=True)
class StateMessage:
    est_state: VehicleState
    e_p: float
    e_psi: float
    rudder_ok_m: bool
    t: float
    active_index: int = 0
    mission_complete: bool = False
    alpha: int = 0
    confirmed: bool = False
    labels: tuple[str, ...] = ()
    truth: VehicleState | None = None


@dataclass(frozen=True)
class PlanningRequest:
    kind: str                      # "initial" or "replan"
    retry_index: int
    violations: tuple[str, ...]
    labels: tuple[str, ...]
    prompt: str


@dataclass(frozen=True)
class StrategyMsg:
    raw: str
    theta: str                     # canonical serialized strategy, "" on parse failure
    error: str
    diagnostics: tuple[str, ...]
    latency: float


@dataclass(frozen=True)
class VerificationResult:
    passed: bool
    violations: tuple[str, ...]
    checks_passed: int
    details: str                   # compact JSON of per-check diagnostics
    latency: float


@dataclass(frozen=True)
class ControlCommandMsg:
    rudder_cmd: float
    speed_setpoint: float
    rudder_bias: float
    source: str


PAYLOADS: dict[MsgType, type] = {
    MsgType.STATE_DATA: StateMessage,
    MsgType.PLANNING_REQUEST: PlanningRequest,
    MsgType.STRATEGY: StrategyMsg,
    MsgType.VERIFICATION_RESULT: VerificationResult,
    MsgType.CONTROL_COMMAND: ControlCommandMsg,
}
_TYPE_OF = {v: k for k, v in PAYLOADS.items()}

ENVELOPE = ("t_stamp", "src", "dst", "msg_type", "corr_id", "wall", "payload")


@dataclass(frozen=True)
class TypedMessage:
    t_stamp: float
    src: str
    dst: str
    msg_type: MsgType
    payload: Any
    corr_id: str = ""
    wall: float | None = None

    def __post_init__(self):
        if PAYLOADS[self.msg_type] is not type(self.payload):
            raise TypeError(f"{self.msg_type.value} message cannot carry {type(self.payload).__name__}")


_STATE_FIELDS = tuple(f.name for f in fields(VehicleState))


def _state_out(s: VehicleState | None):
    return None if s is None else {k: getattr(s, k) for k in _STATE_FIELDS}


def _state_in(d) -> VehicleState:
    if not isinstance(d, dict) or tuple(d) != _STATE_FIELDS:
        raise TypeError("bad vehicle state")
    return VehicleState(**{k: (bool(v) if k == "rudder_ok" else _num(v)) for k, v in d.items()})


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _payload_out(p) -> dict:
    out = {}
    for f in fields(p):
        v = getattr(p, f.name)
        if isinstance(v, VehicleState) or (v is None and f.name == "truth"):
            v = _state_out(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def _payload_in(cls, d: dict):
    names = tuple(f.name for f in fields(cls))
    if not isinstance(d, dict) or tuple(d) != names:
        raise TypeError(f"payload keys do not match {cls.__name__}")
    kw = {}
    for f in fields(cls):
        v = d[f.name]
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
        if f.name in ("est_state",):
            v = _state_in(v)
        elif f.name == "truth":
            v = None if v is None else _state_in(v)
        elif t.startswith("tuple"):
            if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
                raise TypeError(f"{f.name} must be a list of strings")
            v = tuple(v)
        elif t == "bool":
            if not isinstance(v, bool):
                raise TypeError(f"{f.name} must be boolean")
        elif t == "int":
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError(f"{f.name} must be an integer")
        elif t == "float":
            v = _num(v)
        elif t == "str":
            if not isinstance(v, str):
                raise TypeError(f"{f.name} must be a string")
        kw[f.name] = v
    return cls(**kw)


def encode(msg: TypedMessage) -> bytes:
    obj = {"t_stamp": msg.t_stamp, "src": msg.src, "dst": msg.dst,
           "msg_type": msg.msg_type.value, "corr_id": msg.corr_id, "wall": msg.wall,
           "payload": _payload_out(msg.payload)}
    return (json.dumps(obj, separators=(",", ":"), allow_nan=False, ensure_ascii=True) + "\n").encode()


def decode(line: bytes | str) -> TypedMessage:
    text = line.decode() if isinstance(line, (bytes, bytearray)) else line
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DecodeError(f"malformed JSON ({exc.msg if hasattr(exc, 'msg') else exc})", line) from None
    if not isinstance(obj, dict) or tuple(obj) != ENVELOPE:
        raise DecodeError("envelope fields missing or out of order", line)
    try:
        mtype = MsgType(obj["msg_type"])
    except ValueError:
        raise DecodeError(f"unknown msg_type {obj['msg_type']!r}", line) from None
    try:
        payload = _payload_in(PAYLOADS[mtype], obj["payload"])
        wall = obj["wall"]
        if wall is not None:
            wall = _num(wall)
        if not isinstance(obj["src"], str) or not isinstance(obj["dst"], str) \
                or not isinstance(obj["corr_id"], str):
            raise TypeError("src, dst and corr_id must be strings")
        return TypedMessage(_num(obj["t_stamp"]), obj["src"], obj["dst"], mtype, payload,
                            obj["corr_id"], wall)
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"schema mismatch for {mtype.value}: {exc}", line) from None


class LineBuffer:
    """Reassembles newline-framed messages from arbitrary byte chunks."""

    def __init__(self):
        self._pending = b""

    def feed(self, chunk: bytes) -> list[bytes]:
        data = self._pending + chunk
        *lines, self._pending = data.split(b"\n")
        return [ln + b"\n" for ln in lines]

    @property
    def pending(self) -> bytes:
        return self._pending


def read_transcript(path) -> list[TypedMessage]:
    with open(path, "rb") as fh:
        return [decode(line) for line in fh if line.strip()]
