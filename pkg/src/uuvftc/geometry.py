"""Planar geometry shared by the planner, solver and perception code.

Headings use the math convention: 0 along +x, counter-clockwise positive,
wrapped to (-pi, pi].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

KNOT = 0.514444  # m/s


class ConfigurationError(ValueError):
    """Raised for invalid geometry or scenario configuration."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def unit(heading: float) -> np.ndarray:
    return np.array([math.cos(heading), math.sin(heading)])


def left_normal(heading: float) -> np.ndarray:
    return np.array([-math.sin(heading), math.cos(heading)])


def segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from ``points`` (n, 2) to segments ``a[i]-b[i]`` (m, 2).

    Returns an (n, m) array. Projections are clamped to the segment endpoints.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    ap = points[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.einsum("nmj,mj->nm", ap, ab) / L2[None, :]
    s = np.where(L2[None, :] > 0.0, np.clip(s, 0.0, 1.0), 0.0)
    foot = a[None, :, :] + s[..., None] * ab[None, :, :]
    return np.linalg.norm(points[:, None, :] - foot, axis=-1)


def nearest_on_polyline(point: Sequence[float], polyline: np.ndarray) -> tuple[float, int]:
    """Distance from ``point`` to the polyline and the index of the nearest segment.

    Ties go to the lowest segment index.
    """
    pts = np.asarray(polyline, dtype=float)[:, :2]
    if len(pts) < 2:
        raise ConfigurationError("polyline needs at least 2 waypoints")
    d = segment_distances(np.asarray(point, dtype=float)[:2], pts[:-1], pts[1:])[0]
    k = int(np.argmin(d))
    return float(d[k]), k


@dataclass(frozen=True)
class Arc:
    """Circular arc: ``center + radius * (cos t, sin t)`` for t from theta_start
    sweeping ``direction * sweep`` radians (direction +1 is CCW)."""

    center: tuple[float, float]
    radius: float
    theta_start: float
    theta_end: float
    direction: int

    @property
    def sweep(self) -> float:
        return abs(self.theta_end - self.theta_start)

    def sample(self, dtheta: float) -> np.ndarray:
        """Points every ``dtheta`` from the start, plus the end point. The grid
        is anchored at the start, so halving ``dtheta`` keeps every old sample."""
        if dtheta <= 0.0:
            raise ConfigurationError("dtheta must be positive")
        n = int(math.floor(self.sweep / dtheta + 1e-9))
        t = self.theta_start + self.direction * dtheta * np.arange(n + 1)
        if self.sweep - n * dtheta > 1e-9:
            t = np.append(t, self.theta_end)
        c = np.asarray(self.center)
        return c + self.radius * np.column_stack([np.cos(t), np.sin(t)])

    def point_at(self, theta: float) -> np.ndarray:
        return np.asarray(self.center) + self.radius * np.array([math.cos(theta), math.sin(theta)])


@dataclass(frozen=True)
class Route:
    """Corner waypoints filleted with a common turning radius."""

    corners: np.ndarray        # (n, 2) or (n, 3) with depth
    radius: float
    lines: tuple[tuple[np.ndarray, np.ndarray], ...]
    arcs: tuple[Arc, ...]
    arc_corner: tuple[int, ...]   # corner index each arc belongs to
    fits: bool                  # False when neighbouring fillets overlap
    overlap: tuple[int, ...] = ()  # segment indices where they overlap


def fillet_route(corners: Sequence[Sequence[float]], radius: float) -> Route:
    """Replace every interior corner with a tangent arc of ``radius``."""
    C = np.asarray(corners, dtype=float)
    P = C[:, :2]
    n = len(P)
    tangent = np.zeros(n)
    arcs: list[Arc] = []
    arc_corner: list[int] = []
    geo: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i in range(1, n - 1):
        d1 = P[i] - P[i - 1]
        d2 = P[i + 1] - P[i]
        n1, n2 = np.linalg.norm(d1), np.linalg.norm(d2)
        if n1 == 0.0 or n2 == 0.0:
            continue
        d1 /= n1
        d2 /= n2
        turn = math.atan2(d1[0] * d2[1] - d1[1] * d2[0], float(d1 @ d2))
        if abs(turn) < 1e-9 or radius <= 0.0:
            continue
        T = radius * math.tan(abs(turn) / 2.0)
        tangent[i] = T
        t1 = P[i] - T * d1
        t2 = P[i] + T * d2
        sgn = 1 if turn > 0 else -1
        normal = np.array([-d1[1], d1[0]]) * sgn
        c = t1 + radius * normal
        th0 = math.atan2(t1[1] - c[1], t1[0] - c[0])
        arcs.append(Arc((float(c[0]), float(c[1])), radius, th0, th0 + sgn * abs(turn), sgn))
        arc_corner.append(i)
        geo[i] = (t1, t2)

    lines = []
    overlap = []
    for i in range(n - 1):
        seg = np.linalg.norm(P[i + 1] - P[i])
        if tangent[i] + tangent[i + 1] > seg + 1e-9:
            overlap.append(i)
        start = geo[i][1] if i in geo else P[i]
        end = geo[i + 1][0] if (i + 1) in geo else P[i + 1]
        lines.append((start, end))
    return Route(C, float(radius), tuple(lines), tuple(arcs), tuple(arc_corner),
                 not overlap, tuple(overlap))


def densify_route(route: Route, spacing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Dense tracking polyline for a route: straight legs keep only their
    endpoints, arcs are sampled every ``spacing`` metres of arc length.

    Returns ``(points (m, 2), depths (m,))``; every point inherits the depth
    of the corner it leads to (arcs take their own corner's depth).
    """
    C = route.corners
    depth = C[:, 2] if C.shape[1] > 2 else np.zeros(len(C))
    arcs = dict(zip(route.arc_corner, route.arcs))
    pts: list[np.ndarray] = [C[0, :2]]
    deps: list[float] = [float(depth[0])]

    def push(p, d):
        if np.linalg.norm(p - pts[-1]) > 1e-6:
            pts.append(np.asarray(p, dtype=float))
            deps.append(float(d))

    for i, (a, b) in enumerate(route.lines):
        push(a, depth[i + 1] if i > 0 else depth[0])
        push(b, depth[i + 1])
        arc = arcs.get(i + 1)
        if arc is not None and arc.radius > 0:
            step = spacing / arc.radius
            for p in arc.sample(step)[1:]:
                push(p, depth[i + 1])
    return np.array(pts), np.array(deps)


def turn_route(start: Sequence[float], heading: float, radius: float,
               target: Sequence[float], turn_sign: int = 1,
               max_piece: float = math.pi / 2) -> list[np.ndarray]:
    """Corner waypoints for: turn from ``heading`` on a circle of ``radius``
    (CCW for ``turn_sign`` = +1), leave it on the tangent towards ``target``.

    Filleting the returned corners with the same radius reproduces the circle
    arc exactly. The first entry is ``start`` and the last is ``target``.
    """
    p = np.asarray(start, dtype=float)[:2]
    T = np.asarray(target, dtype=float)[:2]
    s = 1 if turn_sign >= 0 else -1
    c = p + radius * s * left_normal(heading)
    D = float(np.linalg.norm(T - c))
    if D <= radius + 1e-9:
        raise ConfigurationError("target lies inside the turning circle")
    beta = math.atan2(T[1] - c[1], T[0] - c[0])
    alpha = math.acos(radius / D)
    phi = beta - alpha if s > 0 else beta + alpha
    exit_heading = phi + s * math.pi / 2
    total = (s * (exit_heading - heading)) % (2.0 * math.pi)
    out = [p]
    if total < 1e-9:
        out.append(T)
        return out
    pieces = max(1, int(math.ceil(total / max_piece - 1e-12)))
    step = total / pieces
    h = heading
    for _ in range(pieces):
        tp = c - radius * s * left_normal(h)
        corner = tp + radius * math.tan(step / 2.0) * unit(h)
        out.append(corner)
        h += s * step
    out.append(T)
    return out
