"""Approach-velocity extremal problem and the double-exponential growth bounds.

The super-level set of the two-point approach kernel

    k(y) = |y1 y2| / (|y - (eps, 0)|^2 |y + (eps, 0)|^2)

is handled exactly along rays: with ``w = r^2`` the condition ``k >= a``
reads ``a w^2 - (2 a eps^2 cos 2t + sin(2t)/2) w + a eps^4 <= 0``, so every
ray from the origin meets the set in one interval ``[w-, w+]`` (or not at
all).  Areas and kernel integrals then reduce to one-dimensional angular
quadratures with closed-form radial parts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadratureSpec, integrate_intervals

GROWTH_SLACK = 0.10
_TWO_OVER_PI = 2.0 / math.pi


class ThresholdExceeded(RuntimeError):
    """The super-level set is not contained in the ball of radius 10*sqrt(I)."""


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtremalResult:
    eps: float
    I: float
    a_threshold: float
    area: float
    approach_velocity: float | None = None
    max_radius: float = float("nan")
    quad_error: float = 0.0

    def bound_value(self, C: float = 1.0) -> float:
        """Upper bound ``-4 eps ln eps / pi + (4 ln(10 sqrt I) + 2 C pi) eps / pi``."""
        e = self.eps
        return -4 * e * math.log(e) / math.pi + (4 * math.log(10 * math.sqrt(self.I)) + 2 * C * math.pi) / math.pi * e

    @property
    def ratio(self) -> float:
        """``pi * approach_velocity / (4 eps |ln eps|)``; tends to 1 as eps -> 0."""
        return math.pi * self.approach_velocity / (4 * self.eps * abs(math.log(self.eps)))


@dataclass(frozen=True)
class GrowthBoundParams:
    CI: float
    grad0: float

    def __post_init__(self):
        if not self.CI > 0:
            raise ValueError("CI must be positive")
        if not self.grad0 > 0:
            raise ValueError("grad0 must be positive")


# -- super-level set ---------------------------------------------------------

def _ray_roots(theta, a, eps):
    """Radial interval ``[w-, w+]`` (in ``w = r^2``) and the discriminant root."""
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    B = 2 * a * eps**2 * c2 + 0.5 * s2
    # B^2 - 4 a^2 eps^4 factored to keep precision near the tangency angles
    D = np.maximum((B - 2 * a * eps**2) * (B + 2 * a * eps**2), 0.0)
    sq = np.sqrt(D)
    wp = (B + sq) / (2 * a)
    wm = np.where(wp > 0, eps**4 / np.where(wp > 0, wp, 1.0), 0.0)
    return wm, wp, sq


def _theta_max(a, eps):
    # rays with tan(theta) > 1/(4 a eps^2) miss the set
    return math.atan2(1.0, 4 * a * eps**2)


def _theta_of(tau, tmax):
    # cosine stretching absorbs the square-root behaviour at both ends
    theta = 0.5 * tmax * (1 - np.cos(np.pi * tau))
    jac = 0.5 * tmax * np.pi * np.sin(np.pi * tau)
    return theta, jac


def superlevel_area(a: float, eps: float, quad: QuadratureSpec | None = None,
                    full_output: bool = False):
    """Measure of ``{y in R^2 : k(y) >= a}`` (all four quadrants)."""
    quad = quad or QuadratureSpec()
    tmax = _theta_max(a, eps)

    def integrand(tau, _idx):
        theta, jac = _theta_of(tau, tmax)
        _, _, sq = _ray_roots(theta, a, eps)
        return 0.5 * sq / a * jac

    val, err = integrate_intervals(integrand, [0.0], [1.0], quad.rel_tol, quad.abs_tol,
                                   quad.max_depth)
    # first quadrant: 1/2 * (w+ - w-) dtheta, with w+ - w- = sqrt(D)/a
    area, err = 4 * val, 4 * err
    return (area, err) if full_output else area


def superlevel_max_radius(a: float, eps: float, n: int = 4097) -> float:
    tmax = _theta_max(a, eps)
    theta = np.linspace(0.0, tmax, n)
    _, wp, _ = _ray_roots(theta, a, eps)
    # refine around the sampled maximum with a golden-section pass
    i = int(np.argmax(wp))
    lo, hi = theta[max(i - 1, 0)], theta[min(i + 1, n - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
        if _ray_roots(m1, a, eps)[1] > _ray_roots(m2, a, eps)[1]:
            hi = m2
        else:
            lo = m1
    return math.sqrt(max(float(wp[i]), float(_ray_roots(0.5 * (lo + hi), a, eps)[1])))


def superlevel_contains(a: float, eps: float, pts) -> np.ndarray:
    """Direct kernel test ``k(y) >= a``, used by the Monte-Carlo oracle."""
    p = np.asarray(pts, dtype=float).reshape(-1, 2)
    y1, y2 = p[:, 0], p[:, 1]
    den = ((y1 - eps) ** 2 + y2**2) * ((y1 + eps) ** 2 + y2**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(y1 * y2) >= a * den


def superlevel_threshold(eps: float, I: float, tol: float = 1e-10,
                         quad: QuadratureSpec | None = None) -> ExtremalResult:
    """Level ``a`` with ``|L_eps(a)| = I`` by bisection in ``ln a``.

    Raises
    ------
    ThresholdExceeded
        if the resulting set leaves ``B_{10 sqrt(I)}(0)``.
    BracketError
        if no bracket is found.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not I >= 1:
        raise ValueError("I must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    quad = quad or QuadratureSpec(rel_tol=min(1e-10, tol / 10), abs_tol=1e-14)

    # the set is close to r^2 <= sin(2 theta) / (2a), of area 1/a
    lo, hi = 0.25 / I, 4.0 / I
    area_lo, area_hi = superlevel_area(lo, eps, quad), superlevel_area(hi, eps, quad)
    for _ in range(200):
        if area_lo >= I:
            break
        hi, area_hi = lo, area_lo
        lo *= 0.5
        area_lo = superlevel_area(lo, eps, quad)
    for _ in range(200):
        if area_hi <= I:
            break
        lo, area_lo = hi, area_hi
        hi *= 2.0
        area_hi = superlevel_area(hi, eps, quad)
    if not (area_lo >= I >= area_hi):
        raise BracketError(f"could not bracket |L(a)| = {I} at eps = {eps}")

    a, area = lo, area_lo
    for _ in range(200):
        a = math.sqrt(lo * hi)
        area = superlevel_area(a, eps, quad)
        if not (area_lo + 1e-12 * I >= area >= area_hi - 1e-12 * I):
            raise BracketError("area(a) not monotone on the bracket")
        if abs(area - I) <= tol * I:
            break
        if area > I:
            lo, area_lo = a, area
        else:
            hi, area_hi = a, area
    rmax = superlevel_max_radius(a, eps)
    if rmax > 10 * math.sqrt(I):
        raise ThresholdExceeded(
            f"threshold exceeded: super-level set reaches radius {rmax:.4g} > 10*sqrt(I)")
    return ExtremalResult(eps=float(eps), I=float(I), a_threshold=a, area=area, max_radius=rmax)


def _radial_kernel_integral(theta, a, eps):
    """``int r k(r, theta) dr`` over the set along each ray (first quadrant)."""
    wm, wp, _ = _ray_roots(theta, a, eps)
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    beta, gamma = eps**2 * c2, eps**2 * s2
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog = np.log(((wp - beta) ** 2 + gamma**2) / ((wm - beta) ** 2 + gamma**2))
        datan = np.arctan2(wp - beta, gamma) - np.arctan2(wm - beta, gamma)
    out = s2 / 8 * dlog + c2 / 4 * datan
    return np.where(wp > wm, out, 0.0)


def approach_velocity_extremal(eps: float, I: float, quad: QuadratureSpec | None = None,
                               threshold: ExtremalResult | None = None) -> ExtremalResult:
    """Maximal ``u1(-eps,0) - u1(eps,0)`` over ``|w| <= 1``, ``||w||_1 = I``.

    Equals ``8 eps / pi`` times the kernel integral over the first-quadrant part
    of the super-level set.
    """
    quad = quad or QuadratureSpec(rel_tol=1e-10, abs_tol=1e-16)
    res = threshold or superlevel_threshold(eps, I)
    a = res.a_threshold
    tmax = _theta_max(a, eps)

    def integrand(tau, _idx):
        theta, jac = _theta_of(tau, tmax)
        return _radial_kernel_integral(theta, a, eps) * jac

    val, err = integrate_intervals(integrand, [0.0], [1.0], quad.rel_tol, quad.abs_tol,
                                   quad.max_depth)
    scale = 8 * eps / math.pi
    return ExtremalResult(eps=res.eps, I=res.I, a_threshold=a, area=res.area,
                          approach_velocity=scale * val, max_radius=res.max_radius,
                          quad_error=scale * err)


def rate_bound(delta: float, m: float | None, CI: float) -> float:
    """Approach-velocity bound for two points at distance ``delta``.

    ``m = min(1/||grad w||, 1)``; pass ``None`` (or 0) for patches, where the
    gradient branch is inactive.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if m is None or m == 0:
        lead = -math.log(delta)
    else:
        if not 0 < m <= 1:
            raise ValueError("m must lie in (0, 1]")
        lead = min(-math.log(delta), -math.log(m))
    return (2 * lead + CI) / math.pi * delta


# -- growth bounds -----------------------------------------------------------

def log_log_gradient_upper_bound(t, params: GrowthBoundParams):
    """``ln ln`` of :func:`gradient_upper_bound`; finite where the bound overflows."""
    L = abs(math.log(params.grad0))
    if L == 0:
        raise ValueError("grad0 = 1 makes the bound degenerate; use 1 + 1e-6")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    out = math.log(L) + _TWO_OVER_PI * t - params.CI * np.expm1(-_TWO_OVER_PI * t) / L
    return float(out) if out.ndim == 0 else out


def log_gradient_upper_bound(t, params: GrowthBoundParams):
    return np.exp(log_log_gradient_upper_bound(t, params))


def gradient_upper_bound(t, params: GrowthBoundParams):
    """``exp(|ln G0| exp(2t/pi + CI (1 - e^{-2t/pi}) / |ln G0|))``; inf on overflow."""
    with np.errstate(over="ignore"):
        out = np.exp(log_gradient_upper_bound(t, params))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class GrowthReport:
    passed: bool
    worst_margin: float
    violations: list = field(default_factory=list)
    n_pairs: int = 0
    slack: float = GROWTH_SLACK


def allowed_log_growth(G0: float, dt: float, CI: float) -> float:
    """Largest ``ln(G1/G0)`` the differential inequality allows over ``dt``.

    For ``G >= 1``, ``z = ln G`` obeys ``z' <= 2/pi (z + CI)``, so ``z + CI``
    grows at most by ``exp(2 dt / pi)``.  Below 1 the same expression with
    ``z = 0`` is an upper bound.
    """
    z0 = max(math.log(G0), 0.0)
    return (z0 + CI) * math.expm1(_TWO_OVER_PI * dt)


def check_growth_inequality(history, CI: float, slack: float = GROWTH_SLACK) -> GrowthReport:
    """Compare each step's growth of the proxy with the integrated bound."""
    hist = [(float(t), float(g)) for t, g in history]
    if any(g <= 0 for _, g in hist):
        raise ValueError("proxies must be positive")
    if any(t1 <= t0 for (t0, _), (t1, _) in zip(hist, hist[1:])):
        raise ValueError("history must be strictly time-sorted")
    worst = math.inf
    bad = []
    for (t0, g0), (t1, g1) in zip(hist, hist[1:]):
        allowed = (1 + slack) * allowed_log_growth(g0, t1 - t0, CI)
        margin = allowed - math.log(g1 / g0)
        worst = min(worst, margin)
        if margin < 0:
            bad.append((t0, t1, margin))
    return GrowthReport(passed=not bad, worst_margin=worst, violations=bad,
                        n_pairs=max(len(hist) - 1, 0), slack=slack)


# -- sweeps ------------------------------------------------------------------

SWEEP_COLUMNS = ("eps", "I", "a_threshold", "area", "approach_velocity", "bound_value", "ratio")


def extremal_sweep(eps_values, I_values, C: float = 1.0, quad: QuadratureSpec | None = None):
    rows = []
    for I in I_values:
        for eps in eps_values:
            r = approach_velocity_extremal(eps, I, quad)
            rows.append({"eps": r.eps, "I": r.I, "a_threshold": r.a_threshold, "area": r.area,
                         "approach_velocity": r.approach_velocity,
                         "bound_value": r.bound_value(C), "ratio": r.ratio})
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(r[k])) for k in SWEEP_COLUMNS})


def monte_carlo_area(a: float, eps: float, n: int = 10**7, seed: int = 0,
                     radius: float | None = None, chunk: int = 10**6) -> float:
    """Hit-or-miss estimate of ``|L_eps(a)|`` on the square ``[-R, R]^2``."""
    R = radius if radius is not None else 1.05 * superlevel_max_radius(a, eps)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        pts = rng.uniform(-R, R, size=(m, 2))
        hits += int(superlevel_contains(a, eps, pts).sum())
        done += m
    return 4 * R * R * hits / n
