"""Profile functions and the first-quadrant regions used by the barrier.

Everything lives in the closed first quadrant.  The profile curve is
``x2 = g(x1)`` with ``g(s) = s * exp(sqrt(|ln s|))``; the region under it
between ``x1 = eps`` and ``x1 = 1/e`` is the set the simulator starts from and
the barrier keeps inside the patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .quadrature import QuadratureSpec, integrate_intervals

E_INV = math.exp(-1.0)
E_INV4 = math.exp(-4.0)
_DOMAIN_SLACK = 1e-15


class DomainError(ValueError):
    """Argument outside the domain where a profile quantity is defined."""


class Point(NamedTuple):
    x1: float
    x2: float

    @property
    def reflect_x1(self) -> "Point":
        return Point(-self.x1, self.x2)

    @property
    def reflect_x2(self) -> "Point":
        return Point(self.x1, -self.x2)

    @property
    def norm(self) -> float:
        return math.hypot(self.x1, self.x2)


def _as_s(s, upper, name="s"):
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr > upper * (1 + _DOMAIN_SLACK)):
        raise DomainError(f"{name} must lie in (0, {upper:.6g}]")
    return arr


def _ret(val, like):
    return float(val) if np.ndim(like) == 0 else val


def eval_g(s):
    """``s * exp(|ln s|**0.5)`` on (0, 1/e]."""
    arr = _as_s(s, E_INV)
    return _ret(arr * np.exp(np.sqrt(np.abs(np.log(arr)))), s)


def eval_g_prime(s):
    arr = _as_s(s, E_INV)
    root = np.sqrt(np.abs(np.log(arr)))
    return _ret(np.exp(root) * (1.0 - 0.5 / root), s)


def eval_f(s):
    """``2 + |ln s|**0.5`` on (0, 1)."""
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr >= 1):
        raise DomainError("s must lie in (0, 1)")
    return _ret(2.0 + np.sqrt(np.abs(np.log(arr))), s)


def omega_region_contains(eps: float, p) -> bool:
    """Open region ``{eps < x1 < 1/e, 0 < x2 < g(x1)}``."""
    x1, x2 = float(p[0]), float(p[1])
    if not (eps < x1 < E_INV) or x2 <= 0:
        return False
    return x2 < eval_g(x1)


def omega_region_contains_many(eps: float, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    x1, x2 = pts[:, 0], pts[:, 1]
    inside = (x1 > eps) & (x1 < E_INV) & (x2 > 0)
    out = np.zeros(len(pts), dtype=bool)
    if inside.any():
        xs = x1[inside]
        out[inside] = x2[inside] < xs * np.exp(np.sqrt(-np.log(xs)))
    return out


def q_region_contains(r: float, p) -> bool:
    if not r > 0:
        raise DomainError("r must be positive")
    x1, x2 = float(p[0]), float(p[1])
    return x1 > 0 and x2 > 0 and math.hypot(x1, x2) > r


def inner_radius(s: float) -> float:
    """Distance from the origin to the corner ``(s, g(s))``."""
    return math.hypot(s, eval_g(s))


def d_region_contains(s: float, p) -> bool:
    _as_s(s, E_INV4)
    x1, x2 = float(p[0]), float(p[1])
    return (omega_region_contains(0.0, p)
            and q_region_contains(inner_radius(s), p)
            and math.hypot(x1, x2) < E_INV)


# -- h(s) -------------------------------------------------------------------

def _log_ray_exit(theta):
    # log of the radius where the ray at angle theta leaves the region under
    # the graph; only meaningful for tan(theta) >= e
    t = np.tan(theta)
    lt = np.log(t)
    return -lt * lt + 0.5 * np.log1p(t * t)


def _theta_where(log_r: float) -> float:
    lo, hi = math.atan(math.e), math.pi / 2
    # work in u = ln tan(theta), where the exit radius is strictly decreasing
    fun = lambda u: -u * u + 0.5 * math.log1p(math.exp(2 * u)) - log_r
    u_hi = 2.0
    while fun(u_hi) > 0:
        u_hi *= 2.0
    u = brentq(fun, 1.0, u_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return min(max(math.atan(math.exp(u)), lo), hi)


def compute_h(s: float, quad: QuadratureSpec | None = None, full_output: bool = False):
    """Profile ratio ``h(s)`` defined by

        (4/pi) * integral over D_s of y1*y2/|y|^4 dy = h(s) * |ln s|.

    In polar coordinates the integrand is ``cos t sin t / r`` and every ray
    meets ``D_s`` in a single radial interval, so the radial integral is a
    logarithm and only the angular integral is done numerically.
    """
    quad = quad or QuadratureSpec(rel_tol=1e-12, abs_tol=1e-14)
    s = float(_as_s(s, E_INV4))
    log_rho = math.log(inner_radius(s))
    theta_1 = _theta_where(-1.0)
    theta_2 = _theta_where(log_rho)
    # rays below theta_1 are cut by the ball of radius 1/e
    head = (-1.0 - log_rho) * math.sin(theta_1) ** 2 / 2.0

    def integrand(theta, _idx):
        return np.sin(theta) * np.cos(theta) * (_log_ray_exit(theta) - log_rho)

    tail, err = integrate_intervals(integrand, [theta_1], [theta_2],
                                    rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                                    max_depth=quad.max_depth, order=16)
    scale = 4.0 / (math.pi * abs(math.log(s)))
    h = scale * (head + tail)
    if full_output:
        return h, scale * err
    return h


def d_region_integral(s: float, quad: QuadratureSpec | None = None) -> float:
    """``(4/pi) * integral over D_s of y1 y2/|y|^4``, i.e. ``h(s)|ln s|``."""
    return compute_h(s, quad) * abs(math.log(s))


def default_s0_grid(smallest: float = 1e-300, per_decade: int = 32) -> np.ndarray:
    """Decreasing log-spaced grid from e^-4 down to ``smallest``."""
    decades = math.log10(E_INV4) - math.log10(smallest)
    n = int(math.ceil(decades * per_decade)) + 1
    return np.logspace(math.log10(E_INV4), math.log10(smallest), n)


class NoAdmissibleS0(RuntimeError):
    pass


def find_s0(C: float, quad: QuadratureSpec | None = None,
            grid: Sequence[float] | None = None) -> float:
    """Largest grid value below which ``h(s)|ln s| >= C f(s)`` holds throughout."""
    grid = default_s0_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty s0 grid")
    if np.any(np.diff(grid) >= 0):
        raise ValueError("s0 grid must be strictly decreasing")
    _as_s(grid, E_INV4, "grid")
    ascending = grid[::-1]
    s0 = None
    for s in ascending:
        if d_region_integral(s, quad) >= C * eval_f(s):
            s0 = s
        else:
            break
    if s0 is None:
        raise NoAdmissibleS0("no admissible s0 on grid")
    return float(s0)


# -- constants --------------------------------------------------------------

@dataclass(frozen=True)
class ProfileConstants:
    C: float
    s0: float
    rho0: float
    Cprime: float
    I: float
    CI: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.C >= 1:
            raise DomainError("C must be >= 1")
        if not self.I >= 1:
            raise DomainError("I must be >= 1")
        _as_s(self.s0, E_INV4, "s0")
        checks = {
            "rho0": (self.rho0, _rho0(self.s0)),
            "Cprime": (self.Cprime, _cprime(self.C, self.s0)),
            "CI": (self.CI, _ci(self.C, self.I)),
        }
        for name, (got, want) in checks.items():
            if not math.isclose(got, want, rel_tol=1e-12):
                raise ValueError(f"{name}={got!r} inconsistent with formula value {want!r}")

    @property
    def barrier_rate(self) -> float:
        """``C' s0 / rho0``, the recurring combination in the barrier ODEs."""
        return self.Cprime * self.s0 / self.rho0

    def s0_certified(self, quad: QuadratureSpec | None = None, samples: int = 64,
                     decades: float = 40.0) -> bool:
        """Check ``h(s)|ln s| >= C f(s)`` on a log grid below s0."""
        lo = max(self.s0 * 10.0 ** -decades, 1e-300)
        grid = np.logspace(math.log10(self.s0), math.log10(lo), samples)
        return all(d_region_integral(s, quad) >= self.C * eval_f(s) for s in grid)

    def to_dict(self) -> dict:
        return {"C": self.C, "s0": self.s0, "rho0": self.rho0, "Cprime": self.Cprime,
                "I": self.I, "CI": self.CI}


def _rho0(s0):
    return s0 / (2.0 * math.sqrt(abs(math.log(s0))))


def _cprime(C, s0):
    ratio = eval_g(s0) / s0
    return C * ratio * (1.0 + math.log1p(ratio))


def _ci(C, I):
    return 0.25 * (4 * math.log(2) + 4 * math.log(10 * math.sqrt(I)) + (2 * C + 16) * math.pi)


def ci_constant(C: float, I: float) -> float:
    """Additive constant of the approach-velocity bound at mass ``I``."""
    return _ci(C, I)


def derive_constants(C: float, I: float, s0: float, **provenance) -> ProfileConstants:
    if not C >= 1:
        raise DomainError("C must be >= 1")
    if not I >= 1:
        raise DomainError("I must be >= 1")
    _as_s(s0, E_INV4, "s0")
    return ProfileConstants(C=float(C), s0=float(s0), rho0=_rho0(s0), Cprime=_cprime(C, s0),
                            I=float(I), CI=_ci(C, I), provenance=dict(provenance))


# -- boundary sampling ------------------------------------------------------

GRADING_RATIO = 1.15


def _piece_counts(eps, n):
    q = math.log(GRADING_RATIO)
    natural = np.array([
        math.log(E_INV / eps) / q,                      # bottom, graded toward (eps, 0)
        1.0 / (0.15 * 0.5),                             # right side
        math.log(E_INV / eps) / q,                      # graph curve
        max(math.sqrt(abs(math.log(eps))) / q, 1.0),   # left side
    ])
    raw = natural * (n / natural.sum())
    counts = np.maximum(np.floor(raw).astype(int), 1)
    while counts.sum() < n:
        counts[np.argmax(raw - counts)] += 1
    while counts.sum() > n:
        counts[np.argmax(np.where(counts > 1, counts - raw, -np.inf))] -= 1
    return counts


def sample_omega_boundary(eps: float, n: int) -> np.ndarray:
    """Closed counterclockwise polygon tracing the boundary of the profile region.

    Returns an ``(n, 2)`` array of distinct vertices (the closing edge is
    implicit).  Starts at ``(eps, 0)``, runs right along the axis, up the side
    ``x1 = 1/e``, back along the graph of ``g`` and down ``x1 = eps``.  Vertex
    spacing is geometric toward the corners nearest the origin.
    """
    if n < 8:
        raise ValueError("need at least 8 nodes")
    if not (0 < eps < E_INV):
        raise DomainError("eps must lie in (0, 1/e)")
    nb, nr, nc, nl = _piece_counts(eps, n)
    bottom_x = eps * (E_INV / eps) ** (np.arange(nb) / nb)
    bottom = np.column_stack([bottom_x, np.zeros(nb)])
    right_y = np.arange(nr) / nr * eval_g(E_INV)
    right = np.column_stack([np.full(nr, E_INV), right_y])
    curve_s = E_INV * (eps / E_INV) ** (np.arange(nc) / nc)
    curve_s[0] = E_INV
    curve = np.column_stack([curve_s, eval_g(curve_s)])
    top = eval_g(eps)
    if nl == 1:
        left_y = np.array([top])
    else:
        # last interior vertex at height eps; the closing edge drops to the axis
        left_y = top * (eps / top) ** (np.arange(nl) / (nl - 1))
    left = np.column_stack([np.full(len(left_y), eps), left_y])
    return np.vstack([bottom, right, curve, left])


def omega_area(eps: float) -> float:
    """Exact area of the profile region, by adaptive quadrature of g."""
    val, _ = integrate_intervals(lambda s, _i: s * np.exp(np.sqrt(-np.log(s))),
                                 [eps], [E_INV], rel_tol=1e-13, abs_tol=1e-16)
    return val


def shoelace_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
