"""Contour dynamics for the unit patch, with the shrinking barrier region alongside.

The patch lives in the closed first quadrant and carries odd images across
both axes.  Nodes on the ``x1``-axis stay there.  The barrier ``alpha * Omega_eps``
is advanced in log variables, ``(ln alpha, ln eps)``, so that the very large
decay rates of ``alpha`` cannot push it through zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .estimates import GrowthBoundParams, log_log_gradient_upper_bound
from .geometry import first_self_intersection, signed_area
from .kernel import Patch, VorticityField, velocity_batch
from .regions import (E_INV, E_INV4, DomainError, ProfileConstants, compute_h, derive_constants,
                      eval_g, find_s0, omega_region_contains_many, sample_omega_boundary)

LOG_E_INV4 = -4.0
LOG_ALPHA_FLOOR = math.log(1e-150)
CHECKPOINT_VERSION = 1


@lru_cache(maxsize=4)
def default_constants(C: float = 1.0, I: float = 1.0) -> ProfileConstants:
    s0 = find_s0(C)
    return derive_constants(C, I, s0, C_source="lower limit C >= 1", s0_grid="32/decade")


@dataclass(frozen=True)
class SimConfig:
    initial_eps: float = E_INV4
    dt_max: float = 0.02
    cfl: float = 0.5
    node_spacing_min: float = 1e-7
    node_spacing_max: float = 0.02
    t_end: float = 6.0
    proxy_window: float = 0.2
    constants: ProfileConstants | None = None
    strength: float = 1.0
    initial_nodes: int = 200
    spacing_factor: float = 0.15     # target spacing relative to |p|
    inf_samples: int = 33
    max_nodes: int = 20000
    max_rejections: int = 8
    area_jump_tol: float = 1e-4
    angle_max_deg: float = 15.0

    def __post_init__(self):
        if not (0 < self.initial_eps <= E_INV4):
            raise ValueError("initial_eps must lie in (0, e^-4]")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must lie in (0, 1)")
        if not 0 < self.node_spacing_min < self.node_spacing_max:
            raise ValueError("need 0 < node_spacing_min < node_spacing_max")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not self.proxy_window > 0:
            raise ValueError("proxy_window must be positive")
        if abs(self.strength) > 1:
            raise ValueError("|strength| must be <= 1")
        if self.inf_samples < 2:
            raise ValueError("inf_samples must be >= 2")
        if self.initial_nodes < 8:
            raise ValueError("initial_nodes must be >= 8")

    def resolved_constants(self) -> ProfileConstants:
        return self.constants if self.constants is not None else default_constants()


@dataclass(frozen=True)
class BarrierState:
    log_alpha: float = 0.0
    log_eps: float = LOG_E_INV4
    t: float = 0.0
    status: str = "ok"          # "ok" | "out_of_regime"
    log_eps_rate: float = float("nan")

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    @classmethod
    def initial(cls, eps: float) -> "BarrierState":
        return cls(log_alpha=0.0, log_eps=math.log(eps), t=0.0)


SAMPLE_FIELDS = ("t", "d", "proxy", "log_proxy", "area", "node_count", "log_alpha", "log_eps",
                 "containment_ok", "rate_estimate", "dt", "axis_u2_max")


@dataclass
class DiagnosticsHistory:
    samples: list = field(default_factory=list)

    def append(self, **row) -> None:
        if self.samples and not row["t"] > self.samples[-1]["t"]:
            raise ValueError("diagnostic times must increase strictly")
        if not row["d"] > 0:
            raise ValueError("proxy distance must be positive")
        self.samples.append({k: row[k] for k in SAMPLE_FIELDS})

    def column(self, name) -> np.ndarray:
        return np.array([s[name] for s in self.samples], dtype=float)

    def __len__(self):
        return len(self.samples)


@dataclass
class SimState:
    t: float
    field: VorticityField
    on_axis: np.ndarray
    diagnostics: DiagnosticsHistory
    status: str = "running"      # "running" | "done" | "floor_reached" | "failed"
    message: str = ""
    rejections: int = 0

    @property
    def contour(self) -> np.ndarray:
        return self.field.patches[0].contour

    @property
    def strength(self) -> float:
        return self.field.patches[0].strength


def _make_field(nodes, strength) -> VorticityField:
    return VorticityField((Patch(nodes, strength, True, True),))


# -- diagnostics ---------------------------------------------------------------

def gradient_proxy(state: SimState, window: float, full_output: bool = False):
    """``1/d`` with ``d`` the smallest ``x1`` over off-axis nodes within ``window``.

    Falls back to the smallest ``x1`` over all off-axis nodes when none lies in
    the window.
    """
    if not window > 0:
        raise ValueError("window must be positive")
    c = state.contour
    if len(c) == 0:
        raise ValueError("empty contour")
    free = ~state.on_axis
    if not free.any():
        raise ValueError("contour has no off-axis nodes")
    near = free & (np.hypot(c[:, 0], c[:, 1]) < window)
    pool = near if near.any() else free
    d = float(c[pool, 0].min())
    return (1.0 / d, d) if full_output else 1.0 / d


def _g_second(s):
    L = -np.log(s)
    r = np.sqrt(L)
    return -np.exp(r) / (2 * s * r) * (1 - 1 / (2 * r) + 1 / (2 * L))


def check_containment(state: SimState, barrier: BarrierState, midpoints: bool = True) -> bool:
    """True when no node (nor segment midpoint) has entered ``alpha * Omega_eps``.

    The curved side of the region is concave, so chords joining two points
    on it dip into the region by up to the chord sagitta.  Midpoints are
    allowed that much depth and no more.
    """
    c = state.contour
    alpha, eps = barrier.alpha, barrier.eps
    if alpha == 0.0:
        return True
    if omega_region_contains_many(eps, c / alpha).any():
        return False
    if not midpoints:
        return True
    nxt = np.roll(c, -1, axis=0)
    m = 0.5 * (c + nxt) / alpha
    inside = omega_region_contains_many(eps, m)
    if not inside.any():
        return True
    m = m[inside]
    dx = np.abs(nxt[inside, 0] - c[inside, 0]) / alpha
    lo = np.maximum(m[:, 0] - dx / 2, eps)
    sag = 0.125 * np.abs(_g_second(lo)) * dx**2
    depth = eval_g(np.minimum(m[:, 0], E_INV)) - m[:, 1]
    return bool(np.all(depth <= sag * (1 + 1e-9) + 1e-15 * (1 + np.abs(m[:, 1]))))


def rate_estimate(history, trailing: float = 0.2):
    """Pointwise ``ln ln proxy / t`` and the trailing least-squares slope.

    ``history`` is a :class:`DiagnosticsHistory` or an array of ``(t, ln proxy)``.
    Returns ``(pointwise, slope)`` where ``pointwise`` is a list of ``(t, value)``;
    ``slope`` is ``nan`` with fewer than three usable samples.
    """
    if isinstance(history, DiagnosticsHistory):
        t, lp = history.column("t"), history.column("log_proxy")
    else:
        arr = np.asarray(history, dtype=float).reshape(-1, 2)
        t, lp = arr[:, 0], arr[:, 1]
    ok = (lp > 0) & (t > 0)
    t, lp = t[ok], lp[ok]
    if len(t) == 0:
        return [], float("nan")
    ll = np.log(lp)
    pointwise = list(zip(t.tolist(), (ll / t).tolist()))
    k = max(int(math.ceil(trailing * len(t))), 3)
    if len(t) < 3:
        return pointwise, float("nan")
    slope = float(np.polyfit(t[-k:], ll[-k:], 1)[0])
    return pointwise, slope


# -- refinement ----------------------------------------------------------------

def _turning(c):
    prev = c - np.roll(c, 1, axis=0)
    nxt = np.roll(c, -1, axis=0) - c
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    dot = np.einsum("ij,ij->i", prev, nxt)
    ang = np.arctan2(cross, dot)
    # signed Menger curvature at each node
    a = np.hypot(*prev.T)
    b = np.hypot(*nxt.T)
    chord = np.hypot(*(np.roll(c, -1, axis=0) - np.roll(c, 1, axis=0)).T)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(a * b * chord > 0, 2 * cross / (a * b * chord), 0.0)
    return ang, kappa


def _target_spacing(p, cfg: SimConfig):
    r = np.hypot(p[:, 0], p[:, 1])
    return np.clip(cfg.spacing_factor * r, cfg.node_spacing_min, cfg.node_spacing_max)


def _refine_once(c, axis, cfg: SimConfig):
    n = len(c)
    nxt = np.roll(c, -1, axis=0)
    seg = nxt - c
    length = np.hypot(*seg.T)
    ang, kappa = _turning(c)
    limit = math.radians(cfg.angle_max_deg)
    corner = np.abs(ang) > math.radians(45.0)
    axis_next = np.roll(axis, -1)
    mid = 0.5 * (c + nxt)
    target = _target_spacing(mid, cfg)
    sharp = (np.abs(ang) > limit) | (np.abs(np.roll(ang, -1)) > limit)
    split = (length > target) | (sharp & (length > 2 * cfg.node_spacing_min))
    split &= length > 2 * cfg.node_spacing_min

    # curvature for the arc midpoint; corners contribute nothing
    k0 = np.where(corner, np.nan, kappa)
    k1 = np.roll(k0, -1)
    kseg = np.where(np.isnan(k0), np.where(np.isnan(k1), 0.0, k1),
                    np.where(np.isnan(k1), k0, 0.5 * (k0 + k1)))
    kseg = np.where(axis & axis_next, 0.0, kseg)
    with np.errstate(invalid="ignore", divide="ignore"):
        normal = np.column_stack([-seg[:, 1], seg[:, 0]]) / length[:, None]
    x = np.clip(0.5 * kseg * length, -1.0, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sag = np.where(np.abs(kseg) > 0, (1 - np.sqrt(1 - x * x)) / np.abs(kseg), 0.0)
    sag = np.where(kseg >= 0, sag, -sag)
    new_pts = mid + normal * sag[:, None]
    new_axis = axis & axis_next
    new_pts[new_axis, 1] = 0.0

    # merges: short segment between two gently curved free nodes
    removable = np.zeros(n, dtype=bool)
    short = (length < cfg.node_spacing_min) & ~split
    cand = np.roll(short, 1) & (np.abs(ang) < math.radians(5.0))
    cand &= ~(axis & ~(np.roll(axis, 1) & np.roll(axis, -1)))
    # never remove two neighbours in one pass
    for i in np.flatnonzero(cand):
        if not removable[(i - 1) % n] and not removable[(i + 1) % n]:
            removable[i] = True
    if n - removable.sum() < 8:
        removable[:] = False

    out_pts, out_axis = [], []
    for i in range(n):
        if not removable[i]:
            out_pts.append(c[i])
            out_axis.append(axis[i])
        if split[i] and not removable[i] and not removable[(i + 1) % n]:
            out_pts.append(new_pts[i])
            out_axis.append(new_axis[i])
    changed = bool(split.any() or removable.any())
    return np.array(out_pts), np.array(out_axis, dtype=bool), changed


def refine(state: SimState, config: SimConfig, max_passes: int = 30) -> SimState:
    """Insert arc midpoints on long or sharply turning segments; merge crowded nodes.

    Sets status ``floor_reached`` if the node budget is exhausted.
    """
    c, axis = state.contour.copy(), state.on_axis.copy()
    for _ in range(max_passes):
        c, axis, changed = _refine_once(c, axis, config)
        if len(c) > config.max_nodes:
            return replace(state, status="floor_reached",
                           message=f"resolution floor: node budget {config.max_nodes} exceeded")
        if not changed:
            break
    return replace(state, field=_make_field(c, state.strength), on_axis=axis)


# -- stepping ----------------------------------------------------------------------

def init_state(config: SimConfig) -> tuple[SimState, BarrierState]:
    """Unit patch on the profile region ``Omega_{eps(0)}`` and the barrier at ``alpha = 1``."""
    k = config.resolved_constants()
    if config.initial_eps > k.s0:
        warnings.warn(f"initial_eps={config.initial_eps:.4g} exceeds s0={k.s0:.4g}; the barrier "
                      "inequalities are not guaranteed there", RuntimeWarning, stacklevel=2)
    c = sample_omega_boundary(config.initial_eps, config.initial_nodes)
    axis = c[:, 1] == 0.0
    state = SimState(0.0, _make_field(c, config.strength), axis, DiagnosticsHistory())
    state = refine(state, config)
    # arc midpoints only approximate the graph; put them back on it
    c = state.contour.copy()
    on_graph = (c[:, 0] > config.initial_eps) & (c[:, 0] < E_INV) & (c[:, 1] > 0)
    c[on_graph, 1] = eval_g(c[on_graph, 0])
    state = replace(state, field=_make_field(c, config.strength))
    barrier = BarrierState.initial(config.initial_eps)
    _record(state, barrier, config, dt=0.0, axis_u2=0.0)
    return state, barrier


def _record(state, barrier, config, dt, axis_u2):
    proxy, d = gradient_proxy(state, config.proxy_window, full_output=True)
    t = state.t
    lp = -math.log(d)
    rate = math.log(lp) / t if (t > 0 and lp > 0) else float("nan")
    state.diagnostics.append(
        t=t, d=d, proxy=proxy, log_proxy=lp, area=signed_area(state.contour),
        node_count=len(state.contour), log_alpha=barrier.log_alpha, log_eps=barrier.log_eps,
        containment_ok=check_containment(state, barrier), rate_estimate=rate, dt=dt,
        axis_u2_max=axis_u2)


@lru_cache(maxsize=4096)
def _h_cached(log_eps: float) -> float:
    return compute_h(math.exp(log_eps))


def log_eps_rate(log_eps: float, k: ProfileConstants) -> float:
    """``(ln eps)'`` from the barrier inequality taken with equality."""
    if log_eps > LOG_E_INV4:
        raise DomainError("eps above e^-4: the profile integral h is undefined")
    L = -log_eps
    return -(_h_cached(log_eps) * L - k.C * math.sqrt(L) - 8 * k.C - 3 * k.barrier_rate)


def barrier_sample_points(log_alpha: float, n: int) -> np.ndarray:
    """Chebyshev-spaced points on ``{(alpha/e, s) : 0 <= s <= alpha}``."""
    alpha = math.exp(log_alpha)
    j = np.arange(n)
    s = 0.5 * alpha * (1 - np.cos(np.pi * j / (n - 1)))
    return np.column_stack([np.full(n, E_INV * alpha), s])


def log_alpha_rate(field: VorticityField, log_alpha: float, k: ProfileConstants, n: int) -> float:
    """``(ln alpha)' = -3 (C' s0 / rho0 + C) + e inf u1 / alpha`` over the sampled segment."""
    # u1 is linear in x1 near the axis, so below LOG_ALPHA_FLOOR the ratio
    # u1 / alpha is read off at the floor scale instead of underflowing
    la = max(log_alpha, LOG_ALPHA_FLOOR)
    pts = barrier_sample_points(la, n)
    u1 = velocity_batch(field, pts)[:, 0]
    return -3 * (k.barrier_rate + k.C) + math.e * float(u1.min()) * math.exp(-la)


class _Rejected(Exception):
    pass


def _stage_field(x, strength):
    try:
        return _make_field(x, strength)
    except ValueError as exc:
        raise _Rejected(str(exc)) from None


def _rk4_attempt(state, barrier, dt, k1, config, k):
    x0 = state.contour
    axis = state.on_axis
    strength = state.strength
    eps_live = [barrier.status == "ok"]
    left_regime = []

    def vel(x):
        f = _stage_field(x, strength)
        u = velocity_batch(f, x)
        if not np.all(np.isfinite(u)):
            raise _Rejected("non-finite node speed")
        u[axis, 1] = 0.0
        return f, u

    def brate(f, la, le):
        dla = log_alpha_rate(f, la, k, config.inf_samples)
        if not eps_live[0]:
            return dla, 0.0
        try:
            return dla, log_eps_rate(le, k)
        except DomainError as exc:
            eps_live[0] = False
            left_regime.append(str(exc))
            return dla, 0.0

    la0, le0 = barrier.log_alpha, barrier.log_eps
    b1 = brate(state.field, la0, le0)
    f2, k2 = vel(x0 + 0.5 * dt * k1)
    b2 = brate(f2, la0 + 0.5 * dt * b1[0], le0 + 0.5 * dt * b1[1])
    f3, k3 = vel(x0 + 0.5 * dt * k2)
    b3 = brate(f3, la0 + 0.5 * dt * b2[0], le0 + 0.5 * dt * b2[1])
    f4, k4 = vel(x0 + dt * k3)
    b4 = brate(f4, la0 + dt * b3[0], le0 + dt * b3[1])
    la1 = la0 + dt / 6 * (b1[0] + 2 * b2[0] + 2 * b3[0] + b4[0])
    le1 = le0 + dt / 6 * (b1[1] + 2 * b2[1] + 2 * b3[1] + b4[1])
    if barrier.status == "ok" and (left_regime or le1 > LOG_E_INV4):
        # alpha has its own closed ODE and keeps going; eps stays where its
        # equation stopped making sense
        new_barrier = replace(barrier, t=barrier.t + dt, log_alpha=la1, status="out_of_regime",
                              log_eps_rate=b1[1])
        reason = left_regime[0] if left_regime else f"ln eps would reach {le1:.4g}"
        warnings.warn(f"barrier left its regime at t={barrier.t:.4g}: {reason}", RuntimeWarning,
                      stacklevel=3)
    elif barrier.status == "ok":
        new_barrier = replace(barrier, t=barrier.t + dt, log_alpha=la1, log_eps=le1,
                              log_eps_rate=b1[1])
    else:
        new_barrier = replace(barrier, t=barrier.t + dt, log_alpha=la1)
    x = x0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    x[axis, 1] = 0.0
    return x, new_barrier


def choose_dt(state: SimState, u: np.ndarray, config: SimConfig) -> float:
    """``dt_max``, capped by a deformation CFL: ``cfl * |segment| / |relative velocity|``."""
    c = state.contour
    seg = np.hypot(*(np.roll(c, -1, axis=0) - c).T)
    du = np.hypot(*(np.roll(u, -1, axis=0) - u).T)
    with np.errstate(divide="ignore"):
        lim = np.where(du > 0, config.cfl * seg / du, np.inf)
    return float(min(config.dt_max, lim.min()))


def step(state: SimState, barrier: BarrierState, config: SimConfig,
         dt: float | None = None) -> tuple[SimState, BarrierState]:
    """One RK4 step of nodes and barrier, with rejection and dt halving."""
    k = config.resolved_constants()
    u0 = velocity_batch(state.field, state.contour)
    axis_u2 = float(np.abs(u0[state.on_axis, 1]).max(initial=0.0))
    u0[state.on_axis, 1] = 0.0
    if not np.all(np.isfinite(u0)):
        return replace(state, status="failed", message="non-finite node speed"), barrier
    dt = choose_dt(state, u0, config) if dt is None else dt
    if config.t_end > state.t:
        dt = min(dt, config.t_end - state.t)
    area0 = signed_area(state.contour)
    reason = ""
    for attempt in range(config.max_rejections + 1):
        try:
            x, nb = _rk4_attempt(state, barrier, dt, u0, config, k)
            if not np.all(np.isfinite(x)):
                raise _Rejected("non-finite node position")
            if np.any(x < 0):
                raise _Rejected("node left the first quadrant")
            area1 = signed_area(x)
            if abs(area1 - area0) > config.area_jump_tol * abs(area0):
                raise _Rejected(f"area jump {abs(area1 - area0) / abs(area0):.3g}")
            if first_self_intersection(x) is not None:
                raise _Rejected("contour self-intersection")
        except _Rejected as exc:
            reason = str(exc)
            dt *= 0.5
            continue
        t_new = state.t + dt
        new = SimState(t_new, _make_field(x, state.strength), state.on_axis.copy(),
                       state.diagnostics, state.status, state.message,
                       state.rejections + attempt)
        return new, nb
    return replace(state, status="failed",
                   message=f"step rejected {config.max_rejections + 1} times: {reason}"), barrier


def run(config: SimConfig, state: SimState | None = None, barrier: BarrierState | None = None,
        callback=None) -> tuple[SimState, BarrierState]:
    """Step until ``t_end``, the resolution floor, or failure."""
    if state is None:
        state, barrier = init_state(config)
    floor = 10 * config.node_spacing_min
    while state.status == "running":
        if state.t >= config.t_end:
            state.status = "done"
            break
        state, barrier = step(state, barrier, config)
        if state.status != "running":
            break
        state = refine(state, config)
        if state.status != "running":
            break
        _record(state, barrier, config, dt=state.t - state.diagnostics.samples[-1]["t"],
                axis_u2=_axis_u2(state))
        if callback is not None:
            callback(state, barrier)
        if state.diagnostics.samples[-1]["d"] < floor:
            state.status = "floor_reached"
            state.message = f"resolution floor: d < {floor:.3g}"
    return state, barrier


def _axis_u2(state):
    if not state.on_axis.any():
        return 0.0
    u = velocity_batch(state.field, state.contour[state.on_axis])
    return float(np.abs(u[:, 1]).max())


# -- invariant checks on a finished run -------------------------------------------

def proxy_ripple_ok(history: DiagnosticsHistory, ripple: float = 0.05) -> bool:
    """Proxy never drops more than ``ripple`` below its running maximum."""
    p = history.column("log_proxy")
    running = np.maximum.accumulate(p)
    return bool(np.all(p >= running + math.log1p(-ripple)))


def upper_bound_ok(history: DiagnosticsHistory, CI: float, slack: float = 0.10) -> bool:
    """``proxy(t) <= (1 + slack) * gradient_upper_bound(t; CI, proxy(0))``, in log-log form."""
    t, lp = history.column("t"), history.column("log_proxy")
    grad0 = math.exp(lp[0])
    if grad0 == 1.0:
        grad0 = 1.0 + 1e-6
    llb = log_log_gradient_upper_bound(t, GrowthBoundParams(CI=CI, grad0=grad0))
    return bool(np.all(lp <= np.exp(llb) + math.log1p(slack)))


def area_drift_ok(history: DiagnosticsHistory, per_time: float = 1e-3) -> bool:
    t, a = history.column("t"), history.column("area")
    drift = np.abs(a - a[0]) / abs(a[0])
    return bool(np.all(drift <= per_time * t + 1e-12))


# -- checkpoints ---------------------------------------------------------------------

def write_checkpoint(path, state: SimState, barrier: BarrierState) -> None:
    lines = [f"# eulerlab checkpoint v{CHECKPOINT_VERSION}",
             f"t {float(state.t)!r}",
             f"strength {float(state.strength)!r}",
             f"status {state.status}",
             f"rejections {state.rejections}",
             f"barrier {float(barrier.log_alpha)!r} {float(barrier.log_eps)!r} {float(barrier.t)!r} {barrier.status} "
             f"{float(barrier.log_eps_rate)!r}",
             f"nodes {len(state.contour)}"]
    for (x1, x2), ax in zip(state.contour, state.on_axis):
        lines.append(f"{float(x1)!r} {float(x2)!r} {int(ax)}")
    lines.append(f"samples {len(state.diagnostics)}")
    lines.append(" ".join(SAMPLE_FIELDS))
    for s in state.diagnostics.samples:
        lines.append(" ".join(repr(float(s[k])) if k != "containment_ok" else str(int(s[k]))
                              for k in SAMPLE_FIELDS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_checkpoint(path) -> tuple[SimState, BarrierState]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if lines[0] != f"# eulerlab checkpoint v{CHECKPOINT_VERSION}":
        raise ValueError(f"unsupported checkpoint header: {lines[0]!r}")
    head = {}
    i = 1
    while not lines[i].startswith("nodes "):
        key, _, val = lines[i].partition(" ")
        head[key] = val
        i += 1
    n = int(lines[i].split()[1])
    rows = [lines[i + 1 + j].split() for j in range(n)]
    c = np.array([[float(r[0]), float(r[1])] for r in rows])
    axis = np.array([r[2] == "1" for r in rows])
    i += 1 + n
    m = int(lines[i].split()[1])
    names = lines[i + 1].split()
    hist = DiagnosticsHistory()
    for j in range(m):
        vals = lines[i + 2 + j].split()
        row = {k: float(v) for k, v in zip(names, vals)}
        row["containment_ok"] = bool(int(vals[names.index("containment_ok")]))
        row["node_count"] = int(row["node_count"])
        hist.samples.append(row)
    la, le, bt, bstatus, brate = head["barrier"].split()
    state = SimState(float(head["t"]), _make_field(c, float(head["strength"])), axis, hist,
                     head["status"], "", int(head["rejections"]))
    return state, BarrierState(float(la), float(le), float(bt), bstatus, float(brate))
