"""Physical verification of a replanning strategy.

Three checks run on every call: boundary clearance of waypoints and sampled
arcs inside a convex navigable polygon, the speed envelope, and the
fault-aware minimum turning radius. The verdict carries the full set of
failed labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import KNOT, ConfigurationError, Route, fillet_route, segment_distances
from .reasoner.strategy import StrategyTheta

BOUNDARY = "boundary"
SPEED = "speed"
RADIUS = "radius"
SCHEMA = "schema"
LABELS = (BOUNDARY, SPEED, RADIUS)

RADIUS_TOL = 1e-9


@dataclass(frozen=True)
class NavigableArea:
    vertices: tuple[tuple[float, float], ...]
    d_safe: float

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 3 or V.shape[1] != 2 or not np.all(np.isfinite(V)):
            raise ConfigurationError("navigable area needs >= 3 finite 2-D vertices")
        if not (self.d_safe > 0.0):
            raise ConfigurationError("d_safe must be positive")
        e = np.roll(V, -1, axis=0) - V
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(np.abs(cross) < 1e-12) or not (np.all(cross > 0) or np.all(cross < 0)):
            raise ConfigurationError("navigable area must be a strictly convex polygon")
        if cross[0] < 0:
            V = V[::-1]
        object.__setattr__(self, "vertices", tuple((float(a), float(b)) for a, b in V))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def centroid(self) -> np.ndarray:
        V = self.array
        W = np.roll(V, -1, axis=0)
        c = V[:, 0] * W[:, 1] - W[:, 0] * V[:, 1]
        A = c.sum() / 2.0
        return np.array([((V[:, 0] + W[:, 0]) * c).sum(), ((V[:, 1] + W[:, 1]) * c).sum()]) / (6.0 * A)

    def contains(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
        V = self.array
        E = np.roll(V, -1, axis=0) - V
        rel = P[:, None, :] - V[None, :, :]
        side = E[None, :, 0] * rel[..., 1] - E[None, :, 1] * rel[..., 0]
        return np.all(side >= 0.0, axis=1)


@dataclass(frozen=True)
class SolverLimits:
    u_min: float = 0.25
    u_max: float = 10.0 * KNOT
    a_max: float = 0.5
    L: float = 1.83
    delta_max: float = math.radians(60.0)
    delta_max_eff: float = math.asin(1.83 / 20.0)
    dtheta: float = math.radians(1.0)

    def __post_init__(self):
        if not 0.0 < self.u_min < self.u_max:
            raise ConfigurationError("need 0 < u_min < u_max")
        if not 0.0 < self.delta_max_eff <= self.delta_max:
            raise ConfigurationError("need 0 < delta_max_eff <= delta_max")
        if self.dtheta <= 0.0 or self.a_max <= 0.0 or self.L <= 0.0:
            raise ConfigurationError("dtheta, a_max and L must be positive")

    @property
    def r_min_nom(self) -> float:
        return self.L / (2.0 * math.sin(self.delta_max))

    @property
    def r_min_fault(self) -> float:
        return self.L / (2.0 * math.sin(self.delta_max_eff))

    @property
    def u_max_fault(self) -> float:
        return math.sqrt(self.a_max * self.r_min_fault)

    def r_min_speed(self, u: float) -> float:
        return u * u / self.a_max


@dataclass(frozen=True)
class SolverVerdict:
    passed: bool
    violations: frozenset[str]
    details: dict = field(default_factory=dict, compare=False)

    @property
    def checks_passed(self) -> int:
        return sum(1 for lbl in LABELS if lbl not in self.violations)


def boundary_distances(points, area: NavigableArea) -> tuple[np.ndarray, np.ndarray]:
    """Clearance of each point to the polygon edges, clamped to 0 outside.

    Returns ``(clearance, inside)``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
    V = area.array
    d = segment_distances(P, V, np.roll(V, -1, axis=0)).min(axis=1)
    inside = area.contains(P)
    return np.where(inside, d, 0.0), inside


def boundary_distance(point: Sequence[float], area: NavigableArea) -> float:
    return float(boundary_distances(point, area)[0][0])


def segment_samples(a, b, spacing: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)[:2]
    b = np.asarray(b, dtype=float)[:2]
    n = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
    s = np.linspace(0.0, 1.0, n + 1)[:, None]
    return a + s * (b - a)


def check_boundary(plan: Route, area: NavigableArea, dtheta: float) -> tuple[bool, dict]:
    """Clearance test on waypoints, straight legs and arcs sampled at ``dtheta``."""
    groups: list[tuple[str, int, np.ndarray]] = [("waypoint", i, w[:2]) for i, w in enumerate(plan.corners)]
    for i, (a, b) in enumerate(plan.lines):
        groups.append(("segment", i, segment_samples(a, b, area.d_safe / 2.0)))
    for arc, k in zip(plan.arcs, plan.arc_corner):
        groups.append(("arc", k, arc.sample(dtheta)))
    offending = []
    min_clear = math.inf
    ok = True
    for kind, idx, pts in groups:
        clear, inside = boundary_distances(pts, area)
        min_clear = min(min_clear, float(clear.min()))
        bad = (clear < area.d_safe) | ~inside
        if bad.any():
            ok = False
            j = int(np.argmin(np.where(bad, clear, np.inf)))
            P = np.atleast_2d(pts)
            offending.append({"kind": kind, "index": idx, "point": P[j].tolist(),
                              "clearance": float(clear[j]), "outside": bool(not inside[j])})
    for arc, k in zip(plan.arcs, plan.arc_corner):
        if not area.contains(arc.center)[0]:
            ok = False
            offending.append({"kind": "arc_center", "index": k, "point": list(arc.center),
                              "clearance": 0.0, "outside": True})
    return ok, {"min_clearance": min_clear, "offending": offending}


def check_speed(u_new: float, R_new: float, limits: SolverLimits) -> tuple[bool, dict]:
    r_req = limits.r_min_speed(u_new)
    env = limits.u_min <= u_new <= limits.u_max
    ok = env and R_new >= r_req
    return ok, {"u_new": u_new, "u_min": limits.u_min, "u_max": limits.u_max,
                "in_envelope": env, "R_min_speed": r_req}


def check_fault_radius(R_new: float, rudder_ok: bool, limits: SolverLimits,
                       u_new: float) -> tuple[bool, dict]:
    r_geo = limits.r_min_nom if rudder_ok else limits.r_min_fault
    r_req = max(r_geo, limits.r_min_speed(u_new))
    return R_new >= r_req - RADIUS_TOL, {"R_new": R_new, "R_required": r_req, "rudder_ok": rudder_ok}


def compose_verdict(results: dict[str, tuple[bool, dict]]) -> SolverVerdict:
    failed = frozenset(lbl for lbl, (ok, _) in results.items() if not ok)
    return SolverVerdict(not failed, failed, {lbl: d for lbl, (_, d) in results.items()})


def route_of(theta: StrategyTheta) -> Route:
    return fillet_route(theta.waypoints_new, theta.R_new)


def verify(theta: StrategyTheta, area: NavigableArea, limits: SolverLimits,
           rudder_ok: bool) -> SolverVerdict:
    """Run all three checks; malformed input gives FAIL{schema}."""
    try:
        problems = theta.schema_problems()
    except Exception as exc:  # anything unexpected about the object itself
        problems = [repr(exc)]
    if problems:
        return SolverVerdict(False, frozenset({SCHEMA}), {SCHEMA: problems})
    route = route_of(theta)
    b = check_boundary(route, area, limits.dtheta)
    s = check_speed(theta.u_new, theta.R_new, limits)
    r_ok, r_diag = check_fault_radius(theta.R_new, rudder_ok, limits, theta.u_new)
    if not route.fits:
        # fillets of this radius do not fit between the proposed corners
        r_ok = False
        r_diag = {**r_diag, "fillet_overlap_segments": list(route.overlap)}
    return compose_verdict({BOUNDARY: b, SPEED: s, RADIUS: (r_ok, r_diag)})
