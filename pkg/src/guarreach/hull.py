"""Planar convex hulls and point/polygon distances."""
from __future__ import annotations

import math

import numpy as np


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _prefilter(pts: np.ndarray) -> np.ndarray:
    # Akl-Toussaint: drop points strictly inside the quadrilateral spanned by
    # the extremes along x+y and x-y
    if len(pts) < 64:
        return pts
    s, d = pts[:, 0] + pts[:, 1], pts[:, 0] - pts[:, 1]
    quad = pts[[np.argmin(s), np.argmax(d), np.argmax(s), np.argmin(d)]]
    inside = np.ones(len(pts), dtype=bool)
    for i in range(4):
        o, a = quad[i], quad[(i + 1) % 4]
        c = (a[0] - o[0]) * (pts[:, 1] - o[1]) - (a[1] - o[1]) * (pts[:, 0] - o[0])
        inside &= c > 0
    return pts[~inside]


def hull2d(points) -> np.ndarray:
    """Convex hull by Andrew's monotone chain.

    Returns the vertices counterclockwise starting from the lexicographically
    smallest point, with collinear points dropped. All-collinear input gives
    the two extreme points, a single distinct point gives that point.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("hull of an empty point set")
    pts = _prefilter(pts)
    pts = np.unique(pts, axis=0)  # sorted lexicographically
    if len(pts) <= 2:
        return pts
    p = pts.tolist()
    lower: list = []
    for q in p:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list = []
    for q in reversed(p):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(hull: np.ndarray) -> float:
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segment_distance(p, a, b) -> float:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return float(math.hypot(*(p - a)))
    t = min(1.0, max(0.0, float((p - a) @ ab) / L2))
    return float(math.hypot(*(p - a - t * ab)))


def distance_to_hull(hull: np.ndarray, p) -> float:
    """Euclidean distance from ``p`` to the filled convex polygon ``hull``
    (zero inside)."""
    hull = np.asarray(hull, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if len(hull) == 1:
        return float(math.hypot(*(p - hull[0])))
    if len(hull) == 2:
        return _segment_distance(p, hull[0], hull[1])
    a = hull
    b = np.roll(hull, -1, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
    if np.all(cross >= 0):
        return 0.0
    return min(_segment_distance(p, a[i], b[i]) for i in range(len(a)))


def point_in_hull(hull: np.ndarray, p, tol: float = 1e-9) -> bool:
    return distance_to_hull(hull, p) <= tol


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """sup over the polygon ``a`` of the distance to the polygon ``b``.

    The distance to a convex set is convex, so the supremum sits at a vertex.
    """
    return max(distance_to_hull(b, v) for v in np.asarray(a))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))
