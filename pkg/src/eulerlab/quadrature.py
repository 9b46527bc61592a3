"""Vectorized adaptive Gauss-Legendre rules on intervals and triangles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureWarning(UserWarning):
    """Issued when an adaptive rule stops at max_depth above tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_depth: int = 30
    singularity_radius: float = 1e-3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.singularity_radius < 0:
            raise ValueError("singularity_radius must be >= 0")

    def tightened(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / factor, self.abs_tol / factor,
                              self.max_depth + 4, self.singularity_radius)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _interval_rule(func, a, b, idx, n):
    x, w = gauss_legendre(n)
    h = b - a
    t = a[:, None] + h[:, None] * x[None, :]
    vals = func(t, np.broadcast_to(idx[:, None], t.shape))
    return h * (vals @ w)


def integrate_intervals(func, a, b, rel_tol=1e-10, abs_tol=1e-12,
                        max_depth=40, order=10):
    """Sum of integrals of ``func`` over many intervals, adaptively bisected.

    ``func(t, idx)`` is evaluated on arrays, ``idx`` naming the interval each
    abscissa belongs to.  Every interval is compared against the sum of its
    two halves; halves are kept once the discrepancy fits the interval's share
    of the tolerance.

    Returns
    -------
    total, error_estimate
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    idx = np.arange(a.size)
    if a.size == 0:
        return 0.0, 0.0
    coarse = _interval_rule(func, a, b, idx, order)
    span = np.abs(b - a).sum()
    tol = max(abs_tol, rel_tol * abs(coarse.sum()))
    total = 0.0
    err = 0.0
    n0 = a.size
    for level in range(max_depth):
        mid = 0.5 * (a + b)
        left = _interval_rule(func, a, mid, idx, order)
        right = _interval_rule(func, mid, b, idx, order)
        fine = left + right
        delta = np.abs(fine - coarse)
        share = tol * np.maximum(np.abs(b - a) / span, 1.0 / (n0 * (level + 1) ** 2)) if span > 0 else tol
        done = delta <= share
        total += fine[done].sum()
        err += delta[done].sum()
        if done.all():
            return float(total), float(err)
        keep = ~done
        a = np.concatenate([a[keep], mid[keep]])
        b = np.concatenate([mid[keep], b[keep]])
        idx = np.concatenate([idx[keep], idx[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    total += coarse.sum()
    err += float(delta[keep].sum())
    warnings.warn(f"interval quadrature reached max_depth; error estimate {err:.3g}",
                  QuadratureWarning, stacklevel=2)
    return float(total), float(err)


def _duffy_rule(n):
    x, w = gauss_legendre(n)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    return xi.ravel(), eta.ravel(), ww.ravel()


def _triangle_rule(func, tris, n):
    # Duffy collapse onto vertex 0: kills a 1/r singularity sitting there.
    xi, eta, ww = _duffy_rule(n)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    pts = (a[:, None, :] + xi[None, :, None] * (b - a)[:, None, :]
           + (xi * eta)[None, :, None] * (c - b)[:, None, :])
    jac = np.abs(_cross(b - a, c - b))
    vals = func(pts)
    weights = ww * xi
    return jac[:, None] * np.einsum("tpk,p->tk", vals, weights)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _split4(tris):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([b, bc, ab], axis=1),
        np.stack([c, ca, bc], axis=1),
        np.stack([bc, ca, ab], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 2)


def integrate_triangles(func, tris, signs=None, rel_tol=1e-8, abs_tol=1e-10,
                        max_depth=12, order=6):
    """Signed sum of vector-valued integrals over triangles.

    ``func(pts)`` maps an array ``(..., 2)`` of points to ``(..., k)`` values.
    The Duffy map is anchored at vertex 0 of each input triangle, so a point
    singularity of order 1/r is allowed there.
    """
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
    area = 0.5 * np.abs(_cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]))
    if signs is None:
        signs = np.ones(len(tris))
    keep = area > 0
    tris, area, signs = tris[keep], area[keep], np.asarray(signs, float)[keep]
    if len(tris) == 0:
        k = func(np.zeros((1, 1, 2))).shape[-1]
        return np.zeros(k), 0.0
    coarse = _triangle_rule(func, tris, order) * signs[:, None]
    tol = max(abs_tol, rel_tol * np.abs(coarse.sum(axis=0)).max())
    area_total = area.sum()
    total = np.zeros(coarse.shape[1])
    err = 0.0
    n0 = len(tris)
    for level in range(max_depth):
        kids = _split4(tris)
        fine_k = _triangle_rule(func, kids, order).reshape(len(tris), 4, -1)
        fine_k *= signs[:, None, None]
        fine = fine_k.sum(axis=1)
        delta = np.abs(fine - coarse).max(axis=1)
        # cells next to a point singularity only converge linearly under
        # subdivision; the floor decays slower than that so they can finish
        done = delta <= tol * np.maximum(area / area_total, 1.0 / (n0 * (level + 1) ** 2))
        total += fine[done].sum(axis=0)
        err += delta[done].sum()
        if done.all():
            return total, float(err)
        keep = ~done
        tris = kids.reshape(len(keep), 4, 3, 2)[keep].reshape(-1, 3, 2)
        coarse = fine_k[keep].reshape(-1, fine_k.shape[-1])
        signs = np.repeat(signs[keep], 4)
        area = np.repeat(area[keep] / 4.0, 4)
    total += coarse.sum(axis=0)
    err += float(delta[~done].sum())
    warnings.warn(f"triangle quadrature reached max_depth; error estimate {err:.3g}",
                  QuadratureWarning, stacklevel=2)
    return total, err
