"""``lab`` command line: one subcommand per verification run.

Each run writes ``report.json`` plus CSV/SVG artifacts into the output
directory.  Exit status is 0 when every check passes, 1 when a check fails
and 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .battery import b_grid, b_samples, rectangle, standard_battery
from .config import ConfigError, ExperimentConfig, load
from .estimates import (BracketError, ThresholdExceeded, approach_velocity_extremal,
                        check_growth_inequality, extremal_sweep, log_log_gradient_upper_bound,
                        GrowthBoundParams, rate_bound, superlevel_threshold, write_sweep_csv)
from .kernel import (VorticityField, domain_difference_integral, extract_b, remainder_weight,
                     main_term, read_patch_file, velocity_batch, velocity_direct)
from .quadrature import QuadratureSpec, QuadratureWarning
from .regions import (E_INV, ci_constant, compute_h, derive_constants, eval_f, eval_g,
                      eval_g_prime, find_s0, omega_area, sample_omega_boundary, shoelace_area)
from .simulator import (SAMPLE_FIELDS, SimConfig, area_drift_ok, check_containment, init_state,
                        proxy_ripple_ok, rate_estimate, run, upper_bound_ok, write_checkpoint)
from .svg import write_snapshot

TWO_OVER_PI = 2.0 / math.pi

# acceptance criterion -> subcommand that reports it
ACCEPTANCE_MANIFEST = {
    "h_limit": "verify-regions",
    "domain_difference": "verify-kernel",
    "remainder_decomposition": "verify-kernel",
    "extremal_rate": "extremal-sweep",
    "kernel_cross_validation": "verify-kernel",
    "barrier_containment": "simulate",
    "growth_consistency": "bounds",
    "rate_sanity": "simulate",
    "conservation": "simulate",
    "determinism": "verify-kernel",
}


# -- report plumbing -------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Report:
    def __init__(self, command: str, cfg: ExperimentConfig, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.checks = []
        self.invariants = []
        self.artifacts = []
        self.notes = []
        self.t0 = time.perf_counter()

    def check(self, criterion, passed, value=None, bound=None, margin=None, **details):
        status = passed if isinstance(passed, str) else ("pass" if passed else "fail")
        self.checks.append({"name": criterion, "status": status, "value": value,
                            "bound": bound, "margin": margin, "details": details})

    def invariant(self, name, passed, value=None, **details):
        self.invariants.append({"name": name, "status": "pass" if passed else "fail",
                                "value": value, "details": details})

    def artifact(self, path: Path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.artifacts.append({"path": path.name, "sha256": digest})

    @property
    def failed(self) -> bool:
        return any(c["status"] == "fail" for c in self.checks + self.invariants)

    def write(self) -> Path:
        body = {
            "schema": 1,
            "command": self.command,
            "version": __version__,
            "config_hash": self.cfg.digest(),
            "seed": self.cfg["run"]["seed"],
            "status": "fail" if self.failed else "pass",
            "checks": self.checks,
            "invariants": self.invariants,
            "artifacts": self.artifacts,
            "notes": self.notes,
        }
        if not self.cfg["run"]["deterministic"]:
            body["wall_time_s"] = time.perf_counter() - self.t0
        path = self.out / "report.json"
        path.write_text(json.dumps(_clean(body), indent=2, sort_keys=True, allow_nan=False) + "\n")
        return path


def _write_csv(path: Path, columns, rows, comment=None):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _read_csv(path: Path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return [], []
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def _quad(cfg) -> QuadratureSpec:
    q = cfg["quadrature"]
    return QuadratureSpec(q["rel_tol"], q["abs_tol"], q["max_depth"], q["singularity_radius"])


def _constants(cfg):
    c = cfg["constants"]
    s0 = c["s0"] if c["s0"] > 0 else find_s0(c["C"])
    return derive_constants(c["C"], c["I"], s0, s0_source="config" if c["s0"] > 0 else "grid search")


# -- verify-regions --------------------------------------------------------------

def cmd_verify_regions(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("verify-regions", cfg, out)
    quad = _quad(cfg)
    grid = sorted(cfg["regions"]["h_grid"], reverse=True)
    rows = []
    for s in grid:
        h, err = compute_h(s, quad, full_output=True)
        rows.append((s, h, err, abs(h - TWO_OVER_PI)))
    _write_csv(out / "h_table.csv", ("s", "h", "error_estimate", "deviation_from_2_over_pi"), rows)
    rep.artifact(out / "h_table.csv")

    dev = [r[3] for r in rows]
    smallest = rows[-1]
    within = smallest[3] <= 0.05
    monotone = all(b < a for a, b in zip(dev, dev[1:]))
    rep.check("h_limit", within and monotone, value=smallest[1], bound=[TWO_OVER_PI - 0.05, TWO_OVER_PI + 0.05],
              margin=0.05 - smallest[3], s=smallest[0], deviation_monotone=monotone,
              deviations=dev)

    if cfg["regions"]["tightened_rerun"]:
        tight = quad.tightened(10)
        worst = max(abs(compute_h(s, tight) - h) for s, h, _, _ in rows)
        rep.invariant("h_tolerance_headroom", worst <= 10 * max(r[2] for r in rows) + 1e-12,
                      value=worst)

    n = cfg["regions"]["invariant_points"]
    s = np.geomspace(1e-300, E_INV, n)
    g = eval_g(s)
    gp = eval_g_prime(s)
    rep.invariant("g_above_identity", bool(np.all(g > s)))
    rep.invariant("g_prime_bracket", bool(np.all((gp > 1) & (gp < g / s))))
    rep.invariant("g_increasing", bool(np.all(np.diff(g) > 0)))
    f_ok = eval_f(s) >= 1 + np.log1p(g / s)
    rep.invariant("f_dominates_log_ratio", bool(np.all(f_ok)))
    k = np.arange(4, 15)
    sk = 10.0 ** -k.astype(float)
    L = -np.log(sk)
    ratio = -np.log(eval_g(sk)) / L
    rep.invariant("log_g_ratio_limit", bool(np.all(np.abs(1 - ratio) <= L**-0.5 + 1e-12)),
                  value=float(np.max(np.abs(1 - ratio) - L**-0.5)))
    consts = _constants(cfg)
    ss = np.geomspace(consts.s0, E_INV, max(n, 100))
    chain = float(np.min(eval_g(ss) / eval_g_prime(ss) - ss))
    rep.invariant("rho0_chain", consts.rho0 <= chain, value=consts.rho0, bound=chain)
    rep.invariant("s0_certified", consts.s0_certified(quad), value=consts.s0)
    rep.notes.append({"constants": consts.to_dict()})
    return rep


# -- verify-kernel ------------------------------------------------------------------

def _battery(cfg):
    d = cfg["kernel"]["battery_dir"]
    if not d:
        return standard_battery()
    files = sorted(Path(d).glob("*.txt"))
    if not files:
        raise ConfigError(f"no patch files in {d}")
    return {f.stem: read_patch_file(f) for f in files}


def _clear_points(field: VorticityField, rng, n, lo=0.01, hi=0.5, clearance=0.01):
    """Random points at least ``min(segment length, clearance)`` from every contour edge."""
    pts = []
    segs = [(p.contour, np.roll(p.contour, -1, axis=0)) for p in field.patches]
    while len(pts) < n:
        x = rng.uniform(lo, hi, 2)
        ok = True
        for a, b in segs:
            ab = b - a
            t = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
            dist = np.hypot(*(a + t[:, None] * ab - x).T)
            if np.any(dist < np.minimum(np.hypot(*ab.T), clearance)):
                ok = False
                break
        if ok:
            pts.append(x)
    return np.array(pts)


def cmd_verify_kernel(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("verify-kernel", cfg, out)
    kc = cfg["kernel"]
    quad = _quad(cfg)
    rng = np.random.default_rng(cfg["run"]["seed"])
    fields = _battery(cfg)

    # contour against direct quadrature, plus the axis conditions
    worst, worst_axis1, worst_axis2 = 0.0, 0.0, 0.0
    n_warn = 0
    axis_applicable = all(f.odd_x1 and f.odd_x2 for f in fields.values())
    for name, f in fields.items():
        pts = _clear_points(f, rng, kc["cross_points"])
        uc = velocity_batch(f, pts)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", QuadratureWarning)
            ud = np.array([velocity_direct(f, p, quad) for p in pts])
        n_warn += len(caught)
        rel = np.linalg.norm(uc - ud, axis=1) / np.maximum(np.linalg.norm(ud, axis=1), 1e-300)
        worst = max(worst, float(rel.max()))
        if f.odd_x1 and f.odd_x2:
            t = rng.uniform(0.0, 1.0, kc["axis_points"])
            worst_axis1 = max(worst_axis1, float(np.abs(velocity_batch(f, np.column_stack([0 * t, t]))[:, 0]).max()))
            worst_axis2 = max(worst_axis2, float(np.abs(velocity_batch(f, np.column_stack([t, 0 * t]))[:, 1]).max()))
    axis_ok = worst_axis1 <= 1e-12 and worst_axis2 <= 1e-12
    rep.check("kernel_cross_validation", worst <= 1e-3 and (axis_ok or not axis_applicable),
              value=worst, bound=1e-3, margin=1e-3 - worst,
              axis_conditions=("not applicable" if not axis_applicable else
                               {"u1_on_x2_axis": worst_axis1, "u2_on_x1_axis": worst_axis2,
                                "bound": 1e-12}),
              quadrature_warnings=n_warn)

    # domain-difference integral at random points of the unit quarter disc
    r = np.sqrt(rng.uniform(0, 1, kc["domain_points"]))
    th = rng.uniform(0, math.pi / 2, kc["domain_points"])
    vals = [domain_difference_integral((ri * math.cos(t), ri * math.sin(t)), quad, full_output=True)
            for ri, t in zip(np.maximum(r, 1e-6), th)]
    v = np.array([a for a, _ in vals])
    e = np.array([b for _, b in vals])
    rep.check("domain_difference", bool(np.all((v >= 0) & (v <= 8)) and np.all(e < 1e-3)),
              value=float(v.max()), bound=8.0, margin=8.0 - float(v.max()),
              min_value=float(v.min()), max_error_estimate=float(e.max()))

    # remainder fit
    grid = b_grid(kc["grid_n"], kc["grid_lo"], kc["grid_hi"])
    rows = []
    worst_ratio = 0.0
    worst_tight = 0.0
    residual = 0.0
    tight = quad.tightened(10)
    for name, f in fields.items():
        s = b_samples(f, grid, quad)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(s[:, 2:4]) / s[:, 4:6])))
        st = b_samples(f, grid, tight)
        worst_tight = max(worst_tight, float(np.max(np.abs(st[:, 2:4]) / st[:, 4:6])))
        u = velocity_batch(f, grid)
        for x, ux, row in zip(grid, u, s):
            m = main_term(f, x, quad)
            rec = np.array([row[2] + m, row[3] + m])
            want = np.array([-ux[0] / x[0], ux[1] / x[1]])
            residual = max(residual, float(np.max(np.abs(rec - want) / np.maximum(np.abs(want), 1e-300))))
            rows.append((name, *row))
    C_fit = kc["safety"] * worst_ratio
    C_tight = kc["safety"] * worst_tight
    drift = abs(C_tight - C_fit) / C_fit if C_fit > 0 else 0.0
    rep.check("remainder_decomposition", C_fit <= 50 and drift <= 0.10 and residual < 1e-12,
              value=C_fit, bound=50.0, margin=50.0 - C_fit, C_fit_tightened=C_tight,
              relative_change=drift, reconstruction_residual=residual,
              C_used=max(1.0, C_fit))
    _write_csv(out / "b_scatter.csv", ("field", "x1", "x2", "b1", "b2", "w1", "w2"), rows,
               comment=f"C_fit={float(C_fit)!r} safety={float(kc['safety'])!r}")
    rep.artifact(out / "b_scatter.csv")

    # concurrent vs sequential evaluation
    f0 = next(iter(fields.values()))
    pts = rng.uniform(0, 1, (kc["determinism_points"], 2))
    same = np.array_equal(velocity_batch(f0, pts), velocity_batch(f0, pts, sequential=True))
    rep.check("determinism", bool(same), value=int(kc["determinism_points"]),
              note="threaded and sequential batch evaluation compared bitwise")
    rep.notes.append({"C_fit": C_fit})
    return rep


# -- extremal-sweep ------------------------------------------------------------------

def cmd_extremal_sweep(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("extremal-sweep", cfg, out)
    ec = cfg["extremal"]
    C = cfg["constants"]["C"]
    eps_list = sorted(ec["eps"], reverse=True)
    rows = []
    errors = []
    for I in ec["I"]:
        for eps in eps_list:
            try:
                thr = superlevel_threshold(eps, I, tol=ec["tol"])
                res = approach_velocity_extremal(eps, I, threshold=thr)
            except (ThresholdExceeded, BracketError) as exc:
                errors.append({"eps": eps, "I": I, "error": str(exc)})
                continue
            rows.append({"eps": eps, "I": I, "a_threshold": res.a_threshold, "area": res.area,
                         "approach_velocity": res.approach_velocity,
                         "bound_value": res.bound_value(C), "ratio": res.ratio})
    write_sweep_csv(out / "extremal_sweep.csv", rows)
    rep.artifact(out / "extremal_sweep.csv")

    probes = []
    for eps in ec["probe_eps"]:
        try:
            r = superlevel_threshold(eps, 1.0, tol=ec["tol"])
            probes.append({"eps": eps, "status": "contained", "max_radius": r.max_radius})
        except ThresholdExceeded as exc:
            probes.append({"eps": eps, "status": "threshold exceeded", "message": str(exc)})
    rep.notes.append({"probes": probes, "errors": errors})

    one = [r for r in rows if r["I"] == 1.0]
    # ratios are resolved only down to the bisection tolerance
    noise = 10 * ec["tol"]
    if one:
        dev = [abs(r["ratio"] - 1) for r in one]
        first = one[0]
        in_band = 0.7 < first["ratio"] < 1.3 and math.isclose(first["eps"], 1e-3)
        monotone = all(b <= a + noise for a, b in zip(dev, dev[1:]))
        rep.check("extremal_rate", in_band and monotone and not errors, value=first["ratio"],
                  bound=[0.7, 1.3], margin=min(first["ratio"] - 0.7, 1.3 - first["ratio"]),
                  deviations=dev, noise_floor=noise)
    else:
        rep.check("extremal_rate", False, value=None, bound=[0.7, 1.3], reason="no I = 1 rows")

    CI = ci_constant(C, 1.0)
    rep.invariant("extremal_below_closed_form_bound",
                  all(r["approach_velocity"] <= r["bound_value"] for r in rows))
    rep.invariant("rate_bound_dominates",
                  all(rate_bound(2 * r["eps"], None, ci_constant(C, r["I"])) >= r["approach_velocity"]
                      for r in rows), CI=CI)
    by = {(r["eps"], r["I"]): r["approach_velocity"] for r in rows}
    pairs = [(by[(e, 1.0)], by[(e, 4.0)]) for e in eps_list if (e, 1.0) in by and (e, 4.0) in by]
    rep.invariant("larger_mass_faster_approach", all(b > a for a, b in pairs))
    rep.invariant("area_matches_mass", all(abs(r["area"] - r["I"]) <= ec["tol"] * r["I"] for r in rows))
    return rep


# -- simulate ------------------------------------------------------------------------

def _sim_config(cfg) -> SimConfig:
    s = cfg["simulate"]
    return SimConfig(initial_eps=s["initial_eps"], dt_max=s["dt_max"], cfl=s["cfl"],
                     node_spacing_min=s["node_spacing_min"], node_spacing_max=s["node_spacing_max"],
                     t_end=s["t_end"], proxy_window=s["proxy_window"], constants=_constants(cfg),
                     initial_nodes=s["initial_nodes"])


def _interp_log_proxy(hist, t):
    return float(np.interp(t, hist.column("t"), hist.column("log_proxy")))


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("simulate", cfg, out)
    sc = _sim_config(cfg)
    snaps = sorted(cfg["simulate"]["snapshot_times"])
    taken = []

    def snapshot(state, barrier):
        while snaps and state.t >= snaps[0] - 1e-12:
            p = out / f"snapshot_{len(taken):02d}.svg"
            write_snapshot(p, state.contour, barrier.log_alpha, barrier.eps, sc.proxy_window, state.t)
            taken.append(p)
            snaps.pop(0)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        state, barrier = init_state(sc)
        snapshot(state, barrier)
        state, barrier = run(sc, state, barrier, callback=snapshot)
    for w in caught:
        rep.notes.append({"warning": str(w.message)})
    for p in taken:
        rep.artifact(p)

    hist = state.diagnostics
    rows = [[s[k] if k != "containment_ok" else int(s[k]) for k in SAMPLE_FIELDS] for s in hist.samples]
    _write_csv(out / "timeseries.csv", SAMPLE_FIELDS, rows,
               comment=f"status={state.status} barrier={barrier.status}")
    rep.artifact(out / "timeseries.csv")
    pointwise, slope = rate_estimate(hist)
    _write_csv(out / "rate_estimate.csv", ("t", "lnln_proxy_over_t"), pointwise,
               comment=f"trailing_slope={float(slope)!r}")
    rep.artifact(out / "rate_estimate.csv")
    write_checkpoint(out / "checkpoint.txt", state, barrier)
    rep.artifact(out / "checkpoint.txt")

    la, le = hist.column("log_alpha"), hist.column("log_eps")
    contained = bool(np.all(hist.column("containment_ok") == 1))
    ea_dec = bool(np.all(np.diff(la + le) < 0))
    floor = state.status == "floor_reached"
    if len(hist) > 1:
        rep.check("barrier_containment", floor and contained and ea_dec,
                  value=state.status, bound="floor_reached", containment_every_step=contained,
                  eps_alpha_strictly_decreasing=ea_dec, barrier_status=barrier.status,
                  initial_log_eps_rate=barrier.log_eps_rate,
                  barrier_rate=sc.resolved_constants().barrier_rate, t_final=state.t,
                  steps=len(hist) - 1, message=state.message)
    else:
        rep.check("barrier_containment", "not_applicable", value=state.status,
                  containment_initial=contained, reason="no steps taken")
    # eps frozen means the barrier no longer solves its evolution equation
    rep.invariant("barrier_in_regime", barrier.status == "ok", value=barrier.status,
                  eps_nonincreasing=bool(np.all(np.diff(le) <= 0)))

    drift_ok = area_drift_ok(hist)
    a = hist.column("area")
    t = hist.column("t")
    drift_rate = float(np.max(np.abs(a - a[0])[1:] / abs(a[0]) / t[1:])) if len(t) > 1 else 0.0
    conv = {}
    if cfg["simulate"]["convergence_check"] and len(hist) > 1:
        half = replace(sc, dt_max=sc.dt_max / 2, cfl=sc.cfl / 2, t_end=state.t)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            st2, _ = run(half)
        T = min(state.t, st2.t)
        p1 = _interp_log_proxy(hist, T)
        p2 = _interp_log_proxy(st2.diagnostics, T)
        change = abs(math.expm1(p2 - p1))
        conv = {"t_compare": T, "relative_change": change, "pass": change < 0.05}
        rep.check("conservation", drift_ok and conv["pass"], value=drift_rate, bound=1e-3,
                  margin=1e-3 - drift_rate, dt_halved=conv)
    elif len(hist) > 1:
        rep.check("conservation", "not_applicable", value=drift_rate, bound=1e-3,
                  reason="convergence rerun disabled in config")
    else:
        rep.check("conservation", "not_applicable", reason="no steps taken")

    synth_t = np.linspace(0.5, 10.0, 40)
    _, synth = rate_estimate(np.column_stack([synth_t, np.exp(TWO_OVER_PI * synth_t)]))
    synth_ok = abs(synth - TWO_OVER_PI) <= 1e-6
    if math.isfinite(slope):
        rep.check("rate_sanity", 0 < slope <= 1.2 * TWO_OVER_PI and synth_ok, value=slope,
                  bound=[0.0, 1.2 * TWO_OVER_PI], margin=min(slope, 1.2 * TWO_OVER_PI - slope),
                  synthetic_slope=synth)
    else:
        rep.check("rate_sanity", "not_applicable", synthetic_slope=synth,
                  reason="fewer than three samples with proxy > 1")

    a0 = omega_area(sc.initial_eps)
    rep.invariant("initial_area", abs(a[0] / a0 - 1) <= 0.01, value=float(a[0]), bound=a0)
    rep.invariant("initial_proxy", math.isclose(hist.samples[0]["proxy"], 1 / sc.initial_eps, rel_tol=1e-9))
    rep.invariant("axis_nodes_still", float(hist.column("axis_u2_max").max()) < 1e-12)
    rep.invariant("alpha_strictly_decreasing", bool(np.all(np.diff(la) < 0)))
    rep.invariant("proxy_ripple", proxy_ripple_ok(hist))
    rep.invariant("below_growth_upper_bound", upper_bound_ok(hist, sc.resolved_constants().CI))
    return rep


# -- bounds --------------------------------------------------------------------------

def cmd_bounds(cfg: ExperimentConfig, out: Path) -> Report:
    rep = Report("bounds", cfg, out)
    bc = cfg["bounds"]
    path = bc["history"]
    if not path:
        raise ConfigError("bounds.history is not set")
    if not Path(path).is_file():
        raise ConfigError(f"history file not found: {path}")
    cols, rows = _read_csv(Path(path))
    CI = ci_constant(cfg["constants"]["C"], cfg["constants"]["I"])
    if not rows:
        rep.notes.append({"warning": "empty history"})
        print(f"lab bounds: warning: empty history in {path}", file=sys.stderr)
        _write_csv(out / "bounds.csv", ("t", "log_proxy", "lnln_upper_bound"), [])
        rep.artifact(out / "bounds.csv")
        return rep
    data = np.array(rows)
    t = data[:, cols.index("t")]
    lp = data[:, cols.index("log_proxy")]
    grad0 = math.exp(lp[0]) if lp[0] != 0 else 1 + 1e-6
    params = GrowthBoundParams(CI=CI, grad0=grad0)
    grid = np.union1d(t, np.linspace(0, max(bc["t_max"], float(t[-1])), bc["n_points"]))
    llb = log_log_gradient_upper_bound(grid, params)
    lp_on_grid = np.where(grid <= t[-1], np.interp(grid, t, lp), np.nan)
    _write_csv(out / "bounds.csv", ("t", "log_proxy", "lnln_upper_bound"),
               [(a, b, c) for a, b, c in zip(grid, lp_on_grid, llb)],
               comment=f"CI={float(CI)!r} grad0={float(grad0)!r}")
    rep.artifact(out / "bounds.csv")

    growth = check_growth_inequality(list(zip(t, np.exp(lp))), CI, slack=bc["slack"])
    running = np.maximum.accumulate(lp)
    ripple_ok = bool(np.all(lp >= running + math.log1p(-0.05)))
    under = bool(np.all(lp <= np.exp(log_log_gradient_upper_bound(t, params)) + math.log1p(bc["slack"])))
    rep.check("growth_consistency", growth.passed and ripple_ok and under,
              value=growth.worst_margin, bound=0.0, margin=growth.worst_margin,
              nondecreasing_with_ripple=ripple_ok, below_upper_bound=under,
              violations=len(growth.violations), CI=CI)
    return rep


COMMANDS = {
    "verify-regions": cmd_verify_regions,
    "verify-kernel": cmd_verify_kernel,
    "extremal-sweep": cmd_extremal_sweep,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI config file (defaults used when omitted)")
        s.add_argument("--out", help="output directory (overrides run.output_dir)")
        s.add_argument("--deterministic", action="store_true",
                       help="omit wall-clock data so reruns are byte-identical")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config) if args.config else ExperimentConfig()
        if args.deterministic:
            cfg.values["run"]["deterministic"] = True
        out = Path(args.out or cfg["run"]["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory not writable: {out}")
        (out / "config.ini").write_text(cfg.serialize())
        rep = COMMANDS[args.command](cfg, out)
        path = rep.write()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    failed = [c["name"] for c in rep.checks + rep.invariants if c["status"] == "fail"]
    for c in rep.checks:
        print(f"{c['status'].upper():>14}  {c['name']}")
    if failed:
        print(f"failed: {', '.join(failed)}")
    print(f"report: {path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
