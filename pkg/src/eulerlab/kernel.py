"""Biot-Savart velocity for piecewise-constant vorticity with odd images.

Velocity convention: ``u = (d2, -d1) psi`` with ``psi = G * omega`` and
``G = log|x|/(2 pi)``, so that for a first-quadrant patch of positive
vorticity, mirrored with opposite sign across both axes, points near the
origin move toward the ``x2``-axis and up along it.

For a single uniform patch ``P`` of strength ``w``,

    u(x) = (w / 2 pi) * contour integral over dP of log|x - y| dy,

with each straight edge integrated in closed form.  Images are handled by
reflecting the evaluation point instead of materialising mirrored contours.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numba
import numpy as np
from numba import njit, prange

from .geometry import is_simple, polygons_overlap, signed_area
from .quadrature import QuadratureSpec, integrate_intervals, integrate_triangles

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Patch:
    contour: np.ndarray
    strength: float = 1.0
    odd_x1: bool = True
    odd_x2: bool = True

    def __post_init__(self):
        c = np.array(self.contour, dtype=float).reshape(-1, 2)
        if len(np.unique(c, axis=0)) < 3:
            raise ValueError("patch contour needs at least 3 distinct vertices")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite contour vertex")
        if abs(self.strength) > 1:
            raise ValueError("|strength| must be <= 1")
        if signed_area(c) <= 0:
            raise ValueError("patch contour must be counterclockwise")
        if self.odd_x1 and self.odd_x2 and np.any(c < 0):
            raise ValueError("contour of a doubly odd patch must lie in the closed first quadrant")
        c.setflags(write=False)
        object.__setattr__(self, "contour", c)

    @property
    def area(self) -> float:
        return signed_area(self.contour)

    @property
    def n_images(self) -> int:
        return 2 ** (int(self.odd_x1) + int(self.odd_x2))

    def transposed(self) -> "Patch":
        # swapping coordinates flips orientation; reverse to stay counterclockwise
        return Patch(self.contour[::-1, ::-1].copy(), self.strength, self.odd_x2, self.odd_x1)

    def validate(self) -> None:
        if not is_simple(self.contour):
            raise ValueError("patch contour is not simple")


@dataclass(frozen=True)
class VorticityField:
    patches: tuple = ()
    total_l1: float = field(default=None)

    def __post_init__(self):
        patches = tuple(self.patches)
        object.__setattr__(self, "patches", patches)
        recomputed = sum(abs(p.strength) * p.area * p.n_images for p in patches)
        if self.total_l1 is None:
            object.__setattr__(self, "total_l1", recomputed)
        elif not math.isclose(self.total_l1, recomputed, rel_tol=1e-10, abs_tol=1e-300):
            raise ValueError("total_l1 does not match the patches")

    def validate(self) -> None:
        for p in self.patches:
            p.validate()
        for i, p in enumerate(self.patches):
            for q in self.patches[i + 1:]:
                if polygons_overlap(p.contour, q.contour):
                    raise ValueError("patches overlap")

    @property
    def odd_x1(self) -> bool:
        return all(p.odd_x1 for p in self.patches)

    @property
    def odd_x2(self) -> bool:
        return all(p.odd_x2 for p in self.patches)

    def transposed(self) -> "VorticityField":
        return VorticityField(tuple(p.transposed() for p in self.patches))

    @cached_property
    def _packed(self):
        return pack_segments(self.patches)


def single_patch(contour, strength=1.0, odd_x1=True, odd_x2=True) -> VorticityField:
    return VorticityField((Patch(np.asarray(contour, float), strength, odd_x1, odd_x2),))


def pack_segments(patches: Iterable[Patch]):
    a, b, w, f1, f2 = [], [], [], [], []
    for p in patches:
        c = p.contour
        a.append(c)
        b.append(np.roll(c, -1, axis=0))
        n = len(c)
        w.append(np.full(n, float(p.strength)))
        f1.append(np.full(n, p.odd_x1))
        f2.append(np.full(n, p.odd_x2))
    if not a:
        z = np.zeros((0, 2))
        return z, z, np.zeros(0), np.zeros(0, bool), np.zeros(0, bool)
    return (np.ascontiguousarray(np.vstack(a)), np.ascontiguousarray(np.vstack(b)),
            np.concatenate(w), np.concatenate(f1), np.concatenate(f2))


# -- contour kernel -----------------------------------------------------------

@njit(cache=True, inline="always")
def _antideriv(s, h):
    # integral of (1/2) log(s^2 + h^2) ds, without the linear term;
    # hypot keeps tiny arguments from underflowing to log(0)
    out = 0.0
    if s != 0.0:
        out += s * math.log(math.hypot(s, h))
    if h != 0.0:
        out += h * math.atan(s / h)
    return out


@njit(cache=True, inline="always")
def _edge(px, py, ax, ay, bx, by):
    """Vector integral of log|p - y| dy along the straight edge a -> b."""
    dx = bx - ax
    dy = by - ay
    length = math.sqrt(dx * dx + dy * dy)
    ex = dx / length
    ey = dy / length
    qx = px - ax
    qy = py - ay
    tau = qx * ex + qy * ey
    h = qx * ey - qy * ex
    val = _antideriv(length - tau, h) - _antideriv(-tau, h) - length
    return ex * val, ey * val


@njit(cache=True)
def _velocity_one(px, py, a, b, w, f1, f2):
    u1 = 0.0
    u2 = 0.0
    skipped = 0
    for k in range(a.shape[0]):
        ax, ay, bx, by = a[k, 0], a[k, 1], b[k, 0], b[k, 1]
        if ax == bx and ay == by:
            skipped += 1
            continue
        v1, v2 = _edge(px, py, ax, ay, bx, by)
        if f1[k] and f2[k]:
            r1, r2 = _edge(-px, py, ax, ay, bx, by)      # reflected across x1 = 0
            s1, s2 = _edge(px, -py, ax, ay, bx, by)      # reflected across x2 = 0
            t1, t2 = _edge(-px, -py, ax, ay, bx, by)     # point reflection
            # grouped so the axis values cancel exactly
            c1 = (v1 - r1) + (s1 - t1)
            c2 = (v2 - s2) + (r2 - t2)
        elif f1[k]:
            r1, r2 = _edge(-px, py, ax, ay, bx, by)
            c1 = v1 - r1
            c2 = v2 + r2
        elif f2[k]:
            s1, s2 = _edge(px, -py, ax, ay, bx, by)
            c1 = v1 + s1
            c2 = v2 - s2
        else:
            c1 = v1
            c2 = v2
        u1 += w[k] * c1
        u2 += w[k] * c2
    return u1 / TWO_PI, u2 / TWO_PI, skipped


@njit(cache=True, parallel=True)
def _velocity_many(pts, a, b, w, f1, f2):
    n = pts.shape[0]
    out = np.empty((n, 2))
    skipped = np.zeros(n, dtype=np.int64)
    for i in prange(n):
        u1, u2, sk = _velocity_one(pts[i, 0], pts[i, 1], a, b, w, f1, f2)
        out[i, 0] = u1
        out[i, 1] = u2
        skipped[i] = sk
    return out, skipped


@njit(cache=True)
def _velocity_many_serial(pts, a, b, w, f1, f2):
    n = pts.shape[0]
    out = np.empty((n, 2))
    skipped = np.zeros(n, dtype=np.int64)
    for i in range(n):
        u1, u2, sk = _velocity_one(pts[i, 0], pts[i, 1], a, b, w, f1, f2)
        out[i, 0] = u1
        out[i, 1] = u2
        skipped[i] = sk
    return out, skipped


def _configure_threads():
    # the system TBB is too old for numba; prefer OpenMP unless the user chose a layer
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "omp"
    cap = os.environ.get("LAB_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


_configure_threads()


@dataclass
class ContourDiagnostics:
    skipped_segments: int = 0


def velocity_batch(field: VorticityField, points, sequential: bool = False,
                   diagnostics: ContourDiagnostics | None = None) -> np.ndarray:
    """Contour-integral velocity at many points, shape ``(n, 2)``.

    Each point's sum runs over segments in a fixed order, so the threaded and
    sequential paths produce bitwise-identical results.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    if len(pts) == 0:
        return np.zeros((0, 2))
    a, b, w, f1, f2 = field._packed
    if len(a) == 0:
        return np.zeros_like(pts)
    kern = _velocity_many_serial if sequential else _velocity_many
    out, skipped = kern(pts, a, b, w, f1, f2)
    if diagnostics is not None:
        diagnostics.skipped_segments += int(skipped.max(initial=0))
    return out


def velocity_contour(field: VorticityField, x) -> np.ndarray:
    return velocity_batch(field, np.asarray(x, float).reshape(1, 2), sequential=True)[0]


# -- direct area quadrature ------------------------------------------------------

def _kernel_halfplane(x):
    """Integrand of the odd-odd velocity formula, as ``(u1, u2)`` densities."""
    x1, x2 = x

    def func(y):
        y1, y2 = y[..., 0], y[..., 1]
        d_xy = (x1 - y1) ** 2 + (x2 - y2) ** 2          # |x - y|^2
        d_tl = (x1 + y1) ** 2 + (x2 - y2) ** 2          # |x - (-y1, y2)|^2
        d_br = (x1 - y1) ** 2 + (x2 + y2) ** 2          # |x - (y1, -y2)|^2
        d_op = (x1 + y1) ** 2 + (x2 + y2) ** 2          # |x + y|^2
        with np.errstate(divide="ignore", invalid="ignore"):
            k1 = y1 * (x2 - y2) / (d_xy * d_tl) - y1 * (x2 + y2) / (d_br * d_op)
            k2 = y2 * (x1 - y1) / (d_xy * d_br) - y2 * (x1 + y1) / (d_tl * d_op)
        k1 = np.where(np.isfinite(k1), k1, 0.0)
        k2 = np.where(np.isfinite(k2), k2, 0.0)
        return np.stack([2 * x1 / math.pi * k1, -2 * x2 / math.pi * k2], axis=-1)

    return func


def _kernel_images(x, odd_x1, odd_x2):
    x1, x2 = x
    images = [(1.0, 1.0, 1.0)]
    if odd_x1:
        images.append((-1.0, 1.0, -1.0))
    if odd_x2:
        images.append((1.0, -1.0, -1.0))
    if odd_x1 and odd_x2:
        images.append((-1.0, -1.0, 1.0))

    def func(y):
        out = np.zeros(y.shape[:-1] + (2,))
        for m1, m2, sgn in images:
            z1, z2 = m1 * y[..., 0], m2 * y[..., 1]
            r2 = (x1 - z1) ** 2 + (x2 - z2) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                k1 = np.where(r2 > 0, (x2 - z2) / r2, 0.0)
                k2 = np.where(r2 > 0, (z1 - x1) / r2, 0.0)
            out[..., 0] += sgn * k1
            out[..., 1] += sgn * k2
        return out / TWO_PI

    return func


FAN_MAX_ANGLE = math.pi / 12


def _fan(contour, x):
    """Signed triangles ``(x, a, b)`` over the edges, apex angles capped.

    The Duffy rule error relative to the cell value does not shrink under
    self-similar subdivision of the apex cell, so wide apex angles are split
    up front.
    """
    x = np.asarray(x, float)
    a = contour
    b = np.roll(contour, -1, axis=0)
    da, db = a - x, b - x
    orient = da[:, 0] * db[:, 1] - da[:, 1] * db[:, 0]
    ang = np.abs(np.arctan2(orient, np.einsum("ij,ij->i", da, db)))
    pieces = np.maximum(np.ceil(ang / FAN_MAX_ANGLE).astype(int), 1)
    idx = np.repeat(np.arange(len(a)), pieces)
    start = np.concatenate([[0], np.cumsum(pieces)[:-1]])
    k = np.arange(idx.size) - np.repeat(start, pieces)
    m = pieces[idx]
    p0 = a[idx] + (b[idx] - a[idx]) * (k / m)[:, None]
    p1 = a[idx] + (b[idx] - a[idx]) * ((k + 1) / m)[:, None]
    p1[k + 1 == m] = b[idx][k + 1 == m]
    apex = np.broadcast_to(x, p0.shape)
    tris = np.stack([apex, p0, p1], axis=1)
    return tris, np.sign(orient)[idx]


def velocity_direct(field: VorticityField, x, quad: QuadratureSpec | None = None,
                    full_output: bool = False):
    """Velocity by adaptive area quadrature of the Biot-Savart integral.

    Each patch is split into the signed fan of triangles ``(x, a, b)`` over
    its edges; the Duffy collapse at the shared apex ``x`` makes the 1/r
    singularity harmless, so no principal value is needed.  Doubly odd
    patches use the combined half-plane kernel, others the explicit image sum.
    """
    quad = quad or QuadratureSpec()
    x = np.asarray(x, dtype=float)
    if not field.odd_x1:
        raise ValueError("velocity_direct expects a field odd in x1")
    if x[1] < 0:
        raise ValueError("evaluation point must lie in the closed upper half-plane")
    total = np.zeros(2)
    err = 0.0
    for p in field.patches:
        if np.any(np.all(p.contour == x, axis=1)):
            raise ValueError("evaluation point sits on a contour vertex")
        func = _kernel_halfplane(x) if (p.odd_x1 and p.odd_x2) else _kernel_images(x, p.odd_x1, p.odd_x2)
        tris, signs = _fan(p.contour, x)
        val, e = integrate_triangles(func, tris, signs, rel_tol=quad.rel_tol,
                                     abs_tol=quad.abs_tol, max_depth=quad.max_depth)
        total += p.strength * val
        err += abs(p.strength) * e
    if x[0] == 0:
        total[0] = 0.0
    if x[1] == 0 and field.odd_x2:
        total[1] = 0.0
    return (total, err) if full_output else total


# -- main term and remainder ---------------------------------------------------

def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _polar_pieces(contour, rho):
    """Angular intervals (with edge ids) for the fan of ``contour`` from the origin."""
    a = contour
    b = np.roll(contour, -1, axis=0)
    lo, hi, ids = [], [], []
    for k in range(len(a)):
        ak, bk = a[k], b[k]
        if not (np.any(ak) and np.any(bk)) or _cross2(ak, bk) == 0:
            continue
        ta, tb = math.atan2(ak[1], ak[0]), math.atan2(bk[1], bk[0])
        d = bk - ak
        # where the edge crosses the circle |y| = rho
        qa, qb, qc = d @ d, 2 * (ak @ d), ak @ ak - rho * rho
        disc = qb * qb - 4 * qa * qc
        cuts = []
        if disc > 0:
            r = math.sqrt(disc)
            for t in ((-qb - r) / (2 * qa), (-qb + r) / (2 * qa)):
                if 0 < t < 1:
                    y = ak + t * d
                    cuts.append(math.atan2(y[1], y[0]))
        knots = sorted([ta, tb] + cuts, reverse=tb < ta)
        for t0, t1 in zip(knots[:-1], knots[1:]):
            lo.append(t0)
            hi.append(t1)
            ids.append(k)
    return np.array(lo), np.array(hi), np.array(ids, dtype=int)


def polygon_sector_integral(contour, rho, quad: QuadratureSpec | None = None):
    """``integral over {y in polygon, |y| > rho} of y1 y2 / |y|^4``, with error."""
    quad = quad or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)
    contour = np.asarray(contour, float)
    lo, hi, ids = _polar_pieces(contour, rho)
    if lo.size == 0:
        return 0.0, 0.0
    a = contour[ids]
    d = np.roll(contour, -1, axis=0)[ids] - a
    num = _cross2(a, d)

    def integrand(theta, idx):
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        den = _cross2(u, d[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            rmax = num[idx] / den
            logr = np.where(rmax > rho, np.log(np.abs(rmax) / rho), 0.0)
        return u[..., 0] * u[..., 1] * logr

    return integrate_intervals(integrand, lo, hi, rel_tol=quad.rel_tol,
                               abs_tol=quad.abs_tol, max_depth=quad.max_depth, order=12)


def main_term(field: VorticityField, x, quad: QuadratureSpec | None = None,
              full_output: bool = False):
    """``(4/pi) * integral over Q(|x|) of y1 y2 / |y|^4 * omega(y) dy``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.any(x):
        raise ValueError("x must be a nonzero point of the closed first quadrant")
    rho = float(np.hypot(*x))
    total = 0.0
    err = 0.0
    for p in field.patches:
        if np.any(p.contour < 0):
            raise ValueError("main_term integrates first-quadrant patches only")
        val, e = polygon_sector_integral(p.contour, rho, quad)
        total += p.strength * val
        err += abs(p.strength) * e
    total *= 4.0 / math.pi
    err *= 4.0 / math.pi
    return (total, err) if full_output else total


def extract_b(field: VorticityField, x, quad: QuadratureSpec | None = None,
              velocity: np.ndarray | None = None) -> tuple[float, float]:
    """Remainders ``b_j = (-1)^j u_j / x_j - main_term``."""
    x = np.asarray(x, dtype=float)
    if x[0] <= 0 or x[1] <= 0:
        raise ValueError("extract_b needs a point of the open first quadrant")
    u = velocity_contour(field, x) if velocity is None else np.asarray(velocity)
    m = main_term(field, x, quad)
    return float(-u[0] / x[0] - m), float(u[1] / x[1] - m)


def remainder_weight(x) -> tuple[float, float]:
    """``1 + ln((x1 + x2)/x_j)`` for j = 1, 2."""
    x1, x2 = float(x[0]), float(x[1])
    return 1.0 + math.log((x1 + x2) / x1), 1.0 + math.log((x1 + x2) / x2)


# -- the region-difference integral ---------------------------------------------

def domain_difference_integral(x, quad: QuadratureSpec | None = None, full_output=False):
    """Integral of ``y1 y2 / |y|^4`` over the union of the two strips

        (0, 2|x|) x (|x|/2, inf)   and   (|x|/2, inf) x (0, 2|x|).

    Along a ray the union is at most two radial intervals, whose ``dr/r``
    integrals are logarithms; the angular integral is adaptive.
    """
    quad = quad or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-12)
    r = float(np.hypot(*np.asarray(x, float)))
    if r <= 0:
        raise ValueError("x must be nonzero")

    def integrand(theta, _idx):
        c, s = np.cos(theta), np.sin(theta)
        # strip A: r cos < 2r_x, r sin > r_x/2  ->  (r_x/(2 s), 2 r_x / c)
        a_lo, a_hi = 0.5 * r / s, 2 * r / c
        b_lo, b_hi = 0.5 * r / c, 2 * r / s
        has_a = a_hi > a_lo
        has_b = b_hi > b_lo
        # when both are present they overlap, so the union is one interval
        lo = np.where(has_a & has_b, np.minimum(a_lo, b_lo), np.where(has_a, a_lo, b_lo))
        hi = np.where(has_a & has_b, np.maximum(a_hi, b_hi), np.where(has_a, a_hi, b_hi))
        return c * s * np.log(hi / lo)

    # breakpoints where the interval ends swap
    knots = [1e-300, math.atan(0.25), math.pi / 4, math.atan(4.0), math.pi / 2 - 1e-16]
    val, err = integrate_intervals(integrand, knots[:-1], knots[1:], rel_tol=quad.rel_tol,
                                   abs_tol=quad.abs_tol, max_depth=quad.max_depth, order=16)
    return (val, err) if full_output else val


# -- patch geometry files ---------------------------------------------------------

def write_patch_file(path, field: VorticityField) -> None:
    lines = []
    for p in field.patches:
        if lines:
            lines.append("")
        lines.append(f"{float(p.strength)!r} {int(p.odd_x1)} {int(p.odd_x2)}")
        lines.extend(f"{float(a)!r} {float(b)!r}" for a, b in p.contour)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_patch_file(path) -> VorticityField:
    with open(path) as fh:
        text = fh.read()
    patches = []
    for block in text.strip().split("\n\n"):
        rows = [ln.split() for ln in block.strip().splitlines() if ln.strip()]
        if not rows:
            continue
        head = rows[0]
        if len(head) != 3:
            raise ValueError(f"bad patch header: {' '.join(head)!r}")
        verts = np.array([[float(v) for v in r] for r in rows[1:]])
        patches.append(Patch(verts, float(head[0]), bool(int(head[1])), bool(int(head[2]))))
    return VorticityField(tuple(patches))
