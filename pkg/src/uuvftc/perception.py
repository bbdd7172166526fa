"""Navigation errors, the three-condition fault flag and its confirmation window."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .dynamics import VehicleState
from .geometry import ConfigurationError, nearest_on_polyline, wrap_angle

CROSS_TRACK = "cross_track"
HEADING = "heading"
RUDDER = "rudder"


@dataclass(frozen=True)
class NavErrors:
    e_p: float
    e_psi: float


def cross_track_error(pos: Sequence[float], ref_polyline) -> float:
    """Distance to the nearest point of the reference polyline."""
    return nearest_on_polyline(pos, ref_polyline)[0]


def heading_error(psi_des: float, psi_hat: float) -> float:
    return wrap_angle(psi_des - psi_hat)


def raw_fault_flag(errors: NavErrors, rudder_ok_m: bool, eps_p: float, eps_psi: float) -> int:
    if eps_p <= 0.0 or eps_psi <= 0.0:
        raise ConfigurationError("fault thresholds must be positive")
    return int(errors.e_p > eps_p or abs(errors.e_psi) > eps_psi or not rudder_ok_m)


def fault_labels(errors: NavErrors, rudder_ok_m: bool, eps_p: float, eps_psi: float) -> frozenset[str]:
    """Which of the three conditions are currently active."""
    out = set()
    if errors.e_p > eps_p:
        out.add(CROSS_TRACK)
    if abs(errors.e_psi) > eps_psi:
        out.add(HEADING)
    if not rudder_ok_m:
        out.add(RUDDER)
    return frozenset(out)


class FaultWindow:
    """Ring buffer of the last ``n_w`` raw flags."""

    def __init__(self, n_w: int):
        if n_w < 1:
            raise ConfigurationError("n_w must be >= 1")
        self.n_w = int(n_w)
        self.buf: deque[int] = deque(maxlen=self.n_w)

    def clear(self) -> None:
        self.buf.clear()

    def __len__(self) -> int:
        return len(self.buf)


def confirm_flag(window: FaultWindow, alpha_t: int) -> int:
    """Push ``alpha_t``; 1 only for a full window of ones."""
    window.buf.append(1 if alpha_t else 0)
    return int(len(window.buf) == window.n_w and all(window.buf))


@dataclass
class ContextPackage:
    est_state: VehicleState
    ref_plan: Any
    history: list = field(default_factory=list)
    confirmed_flag: bool = True
    violation_labels: frozenset[str] = frozenset()
    t: float = 0.0
    retry_index: int = 0


@dataclass
class PerceptionResult:
    errors: NavErrors
    alpha: int
    confirmed: bool
    rising: bool
    labels: frozenset[str]


class Perception:
    """Slow-loop perception with a latching confirmed flag.

    The flag stays set once confirmed until :meth:`release` is called (new
    route accepted, or hold engaged).
    """

    def __init__(self, eps_p: float, eps_psi: float, n_w: int):
        if eps_p <= 0.0 or eps_psi <= 0.0:
            raise ConfigurationError("fault thresholds must be positive")
        self.eps_p = eps_p
        self.eps_psi = eps_psi
        self.window = FaultWindow(n_w)
        self.latched = False

    def evaluate(self, est_pos, psi_hat: float, psi_des: float, ref_polyline,
                 rudder_ok_m: bool) -> PerceptionResult:
        e = NavErrors(cross_track_error(est_pos, ref_polyline), heading_error(psi_des, psi_hat))
        alpha = raw_fault_flag(e, rudder_ok_m, self.eps_p, self.eps_psi)
        confirmed = confirm_flag(self.window, alpha)
        rising = bool(confirmed) and not self.latched
        if confirmed:
            self.latched = True
        return PerceptionResult(e, alpha, self.latched, rising,
                                fault_labels(e, rudder_ok_m, self.eps_p, self.eps_psi))

    def release(self) -> None:
        self.latched = False
        self.window.clear()


def assemble_context(est_state: VehicleState, plan, history, labels, t: float,
                     retry_index: int = 0) -> ContextPackage:
    return ContextPackage(est_state=est_state, ref_plan=plan, history=list(history),
                          confirmed_flag=True, violation_labels=frozenset(labels), t=t,
                          retry_index=retry_index)


def polyline_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or len(arr) < 2:
        raise ConfigurationError("polyline needs at least 2 waypoints")
    return arr[:, :2]

