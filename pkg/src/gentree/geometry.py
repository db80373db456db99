"""Planar helpers shared by the frontend, compiler and analysis modules."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

DEDUP_TOL = 1e-12
PARALLEL_TOL = 1e-12


def wrap_angle(a: float) -> float:
    """Reduce to ``(-pi, pi]``."""
    r = math.remainder(a, 2.0 * math.pi)
    return math.pi if r == -math.pi else r


def signed_angle(u, v) -> float:
    """Signed angle turning direction ``u`` onto direction ``v``."""
    cross = u[0] * v[1] - u[1] * v[0]
    dot = u[0] * v[0] + u[1] * v[1]
    return math.atan2(cross, dot)


def rotate(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    pts = np.asarray(points, dtype=float)
    return np.stack([c * pts[..., 0] - s * pts[..., 1], s * pts[..., 0] + c * pts[..., 1]], axis=-1)


def line_intersection(p, u, q, v) -> tuple[float, float] | None:
    """Intersection of the lines ``p + a u`` and ``q + b v``; ``None`` when parallel."""
    cross = u[0] * v[1] - u[1] * v[0]
    if abs(cross) < PARALLEL_TOL:
        return None
    a = ((q[0] - p[0]) * v[1] - (q[1] - p[1]) * v[0]) / cross
    return (p[0] + a * u[0], p[1] + a * u[1])


def dedup_points(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Drop points lying within ``tol`` of an earlier point, keeping input order."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return pts.copy()
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return pts.copy()
    drop = np.zeros(len(pts), dtype=bool)
    # pairs come back with i < j; the later index of each close pair goes
    drop[pairs.max(axis=1)] = True
    return pts[~drop]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite planar point set, deduplicated within ``DEDUP_TOL`` unless built with ``dedup=False``."""

    points: np.ndarray
    label: str = ""

    def __init__(self, points, label: str = "", dedup: bool = True):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if dedup:
            pts = dedup_points(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "label", label)

    def __len__(self) -> int:
        return len(self.points)

    def diameter(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(pdist(self.points).max())
