"""Euclidean distances to convex sets (balls, vertex polytopes).

Polytope distances are computed by exact projection onto faces for
dimension <= 3; no iterative solver is involved, so results are
deterministic to machine precision.
"""

from __future__ import annotations

import numpy as np

try:  # degenerate vertex sets (collinear, coplanar) are handled without qhull
    from scipy.spatial import ConvexHull, QhullError
except ImportError:  # pragma: no cover
    ConvexHull = None
    QhullError = Exception


def point_ball_distance(point, center, radius: float) -> float:
    p = np.asarray(point, dtype=float)
    c = np.asarray(center, dtype=float)
    return max(0.0, float(np.linalg.norm(p - c)) - float(radius))


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(p - (a + t * ab)))


def _point_triangle_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    # Closest point on a triangle, via barycentric region tests.
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = float(ab @ ap), float(ac @ ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = float(ab @ bp), float(ac @ bp)
    if d3 >= 0.0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 <= d1 and d3 <= 0.0:
        return _point_segment_distance(p, a, b)
    cp = p - c
    d5, d6 = float(ab @ cp), float(ac @ cp)
    if d6 >= 0.0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 <= d2 and d6 <= 0.0:
        return _point_segment_distance(p, a, c)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        return _point_segment_distance(p, b, c)
    denom = va + vb + vc
    v = vb / denom
    w = vc / denom
    closest = a + v * ab + w * ac
    return float(np.linalg.norm(p - closest))


def _brute_hull_distance(p: np.ndarray, verts: np.ndarray) -> float:
    """Min distance over all vertex simplices; exact for flat hulls."""
    v = verts
    best = min(float(np.linalg.norm(p - x)) for x in v)
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            best = min(best, _point_segment_distance(p, v[i], v[j]))
            if p.shape[0] >= 3:
                for k in range(j + 1, len(v)):
                    best = min(best, _point_triangle_distance(p, v[i], v[j], v[k]))
    return best


def point_hull_distance(point, vertices) -> float:
    """Distance from a point to the convex hull of a vertex list (m <= 3)."""
    p = np.atleast_1d(np.asarray(point, dtype=float))
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim == 1:
        verts = verts[:, None]
    if verts.shape[0] == 0:
        raise ValueError("empty vertex list")
    m = verts.shape[1]
    if m > 3:
        raise ValueError("polytope distances are implemented for dimension <= 3")
    if m == 1:
        lo, hi = float(verts.min()), float(verts.max())
        x = float(p[0])
        return max(0.0, lo - x, x - hi)
    if verts.shape[0] <= m or ConvexHull is None:
        return _brute_hull_distance(p, verts)
    try:
        hull = ConvexHull(verts)
    except QhullError:
        return _brute_hull_distance(p, verts)
    margins = hull.equations[:, :-1] @ p + hull.equations[:, -1]
    if np.all(margins <= 1e-12):
        return 0.0
    if m == 2:
        best = np.inf
        for i, j in hull.simplices:
            best = min(best, _point_segment_distance(p, verts[i], verts[j]))
        return best
    best = np.inf
    for i, j, k in hull.simplices:
        best = min(best, _point_triangle_distance(p, verts[i], verts[j], verts[k]))
    return best


def containment_margin(point, vertices) -> float:
    """How far inside the hull a point sits.

    Positive means strictly inside by that amount, negative means
    outside by that amount.  Full-dimensional hulls use half-space
    margins; flat hulls fall back to minus the Euclidean distance.
    """
    p = np.atleast_1d(np.asarray(point, dtype=float))
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim == 1:
        verts = verts[:, None]
    m = verts.shape[1]
    if m == 1:
        lo, hi = float(verts.min()), float(verts.max())
        return min(float(p[0]) - lo, hi - float(p[0]))
    if ConvexHull is not None and verts.shape[0] > m:
        try:
            hull = ConvexHull(verts)
            margins = hull.equations[:, :-1] @ p + hull.equations[:, -1]
            return float(-np.max(margins))
        except QhullError:
            pass
    return -point_hull_distance(p, verts)
