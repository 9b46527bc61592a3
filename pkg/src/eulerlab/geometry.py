"""Polygon utilities shared by the kernel and the simulator."""

import numpy as np
from numba import njit


def signed_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def segment_lengths(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    return np.hypot(*(np.roll(p, -1, axis=0) - p).T)


@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


@njit(cache=True)
def _on_segment(ax, ay, bx, by, cx, cy):
    return (min(ax, bx) <= cx <= max(ax, bx)) and (min(ay, by) <= cy <= max(ay, by))


@njit(cache=True)
def _segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    return False


@njit(cache=True)
def _first_crossing(p):
    n = p.shape[0]
    # pre-sort by x-extent so disjoint segment pairs are skipped quickly
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        j = (i + 1) % n
        lo[i] = min(p[i, 0], p[j, 0])
        hi[i] = max(p[i, 0], p[j, 0])
    order = np.argsort(lo)
    for ii in range(n):
        i = order[ii]
        i2 = (i + 1) % n
        for jj in range(ii + 1, n):
            j = order[jj]
            if lo[j] > hi[i]:
                break
            j2 = (j + 1) % n
            # adjacent segments share a vertex by construction
            if j == i2 or i == j2:
                continue
            if _segments_cross(p[i, 0], p[i, 1], p[i2, 0], p[i2, 1],
                               p[j, 0], p[j, 1], p[j2, 0], p[j2, 1]):
                return i, j
    return -1, -1


def first_self_intersection(poly):
    """Indices ``(i, j)`` of two crossing non-adjacent edges, or ``None``."""
    p = np.ascontiguousarray(poly, dtype=float)
    i, j = _first_crossing(p)
    return None if i < 0 else (int(i), int(j))


def is_simple(poly) -> bool:
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return False
    if np.any(np.all(p == np.roll(p, -1, axis=0), axis=1)):
        return False
    return first_self_intersection(p) is None


def points_in_polygon(pts, poly) -> np.ndarray:
    """Crossing-number test; boundary points may land on either side."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    p = np.asarray(poly, dtype=float)
    a, b = p, np.roll(p, -1, axis=0)
    x, y = pts[:, 0:1], pts[:, 1:2]
    straddle = (a[:, 1] > y) != (b[:, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    hits = straddle & (x < xcross)
    return (hits.sum(axis=1) % 2) == 1


def polygons_overlap(p, q) -> bool:
    """True if the interiors of two simple polygons intersect."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, b = p[:, None, :], np.roll(p, -1, axis=0)[:, None, :]
    c, d = q[None, :, :], np.roll(q, -1, axis=0)[None, :, :]
    o1 = np.sign(_cross(b - a, c - a))
    o2 = np.sign(_cross(b - a, d - a))
    o3 = np.sign(_cross(d - c, a - c))
    o4 = np.sign(_cross(d - c, b - c))
    if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
        return True
    # no proper crossings: overlap means one polygon pokes into the other
    return bool(points_in_polygon(_inner_probes(p), q).any()
                or points_in_polygon(_inner_probes(q), p).any())


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _inner_probes(p):
    a, b = p, np.roll(p, -1, axis=0)
    mid = 0.5 * (a + b)
    t = b - a
    normal_in = np.column_stack([-t[:, 1], t[:, 0]])
    if signed_area(p) < 0:
        normal_in = -normal_in
    scale = 1e-6 * np.hypot(*t.T)[:, None] / np.maximum(np.hypot(*normal_in.T)[:, None], 1e-300)
    return mid + normal_in * scale
