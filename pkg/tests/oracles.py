"""Independent reference computations used to check the library.

These deliberately avoid the package's own geometry helpers: distances come
from dense sampling refined with a scalar minimiser, containment from the
half-plane equations of a scipy convex hull.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull


def random_convex_polygon(rng: np.random.Generator, n_points: int = 12, scale: float = 100.0):
    """Vertices (CCW) of the convex hull of random points."""
    while True:
        pts = rng.uniform(-scale, scale, size=(n_points, 2))
        hull = ConvexHull(pts)
        V = pts[hull.vertices]
        if len(V) >= 3 and hull.volume > 1.0:
            return V, hull


def inside_hull(hull: ConvexHull, p) -> bool:
    A, b = hull.equations[:, :2], hull.equations[:, 2]
    return bool(np.all(A @ np.asarray(p, dtype=float) + b <= 1e-12))


def _edge_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    f = lambda s: float(np.hypot(*(a + s * (b - a) - p)))
    grid = np.linspace(0.0, 1.0, 401)
    vals = np.hypot(*(a + grid[:, None] * (b - a) - p).T)
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(float(vals[k]), float(res.fun), f(0.0), f(1.0))


def edge_clearance(p, vertices) -> float:
    """Distance from ``p`` to the nearest polygon edge (no inside test)."""
    V = np.asarray(vertices, dtype=float)
    return min(_edge_distance(p, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))


def _dense_clearance(points, vertices, n: int = 2001) -> np.ndarray:
    """Clearance of many points against edges sampled ``n`` times each."""
    V = np.asarray(vertices, dtype=float)
    s = np.linspace(0.0, 1.0, n)[:, None]
    edge_pts = np.vstack([V[i] + s * (V[(i + 1) % len(V)] - V[i]) for i in range(len(V))])
    d = np.hypot(points[:, None, 0] - edge_pts[None, :, 0], points[:, None, 1] - edge_pts[None, :, 1])
    return d.min(axis=1)


def arc_min_clearance(center, radius, th0, th1, vertices) -> float:
    """Continuous minimum of the edge clearance along an arc."""
    c = np.asarray(center, dtype=float)
    on_arc = lambda t: c + radius * np.column_stack([np.cos(t), np.sin(t)])
    g = lambda t: edge_clearance(on_arc(np.atleast_1d(t))[0], vertices)
    grid = np.linspace(th0, th1, 721)
    k = int(np.argmin(_dense_clearance(on_arc(grid), vertices)))
    lo, hi = sorted((grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]))
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return min(g(grid[k]), float(res.fun), g(th0), g(th1))


def polyline_distance_bruteforce(p, polyline, step: float = 1e-3) -> float:
    """Distance to a polyline by sampling every ``step`` metres."""
    P = np.asarray(polyline, dtype=float)[:, :2]
    best = math.inf
    for a, b in zip(P[:-1], P[1:]):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / step)))
        s = np.linspace(0.0, 1.0, n + 1)[:, None]
        pts = a + s * (b - a)
        best = min(best, float(np.min(np.hypot(*(pts - np.asarray(p)[:2]).T))))
    return best


def turning_radius(length: float, delta: float) -> float:
    return length / (2.0 * math.sin(delta))


def kf_update_textbook(mean, cov, z, H, R):
    """Standard-form update, P = (I - K H) P, for comparison with Joseph form."""
    S = H @ cov @ H.T + R
    K = cov @ H.T @ np.linalg.inv(S)
    return mean + K @ (z - H @ mean), (np.eye(len(mean)) - K @ H) @ cov
