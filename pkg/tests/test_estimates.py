import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eulerlab.estimates import (GrowthBoundParams, ThresholdExceeded, allowed_log_growth,
                                approach_velocity_extremal, check_growth_inequality,
                                extremal_sweep, gradient_upper_bound, log_gradient_upper_bound,
                                log_log_gradient_upper_bound, monte_carlo_area, rate_bound,
                                superlevel_area, superlevel_contains, superlevel_max_radius,
                                superlevel_threshold, write_sweep_csv, _ray_roots, _theta_max)
from eulerlab.kernel import single_patch, velocity_batch
from eulerlab.regions import ci_constant

TWO_OVER_PI = 2 / math.pi


def kernel_value(y, eps):
    y = np.atleast_2d(y)
    d1 = (y[:, 0] - eps) ** 2 + y[:, 1] ** 2
    d2 = (y[:, 0] + eps) ** 2 + y[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(y[:, 0] * y[:, 1]) / (d1 * d2)


@pytest.mark.parametrize("a,eps", [(1.0, 1e-3), (0.25, 0.1), (3.0, 0.05)])
def test_area_matches_monte_carlo(a, eps):
    est = monte_carlo_area(a, eps, n=10**6, seed=3)
    exact = superlevel_area(a, eps)
    # binomial standard error for a 10^6 sample hit-or-miss estimate
    R = 1.05 * superlevel_max_radius(a, eps)
    p = exact / (4 * R * R)
    sigma = 4 * R * R * math.sqrt(p * (1 - p) / 1e6)
    assert abs(est - exact) <= 5 * sigma


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(1e-4, 0.3), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_contains_matches_kernel(a, eps, y1, y2):
    k = kernel_value([y1, y2], eps)[0]
    # the kernel is undefined at the source points themselves
    if not np.isfinite(k) or abs(k - a) < 1e-9 * a:
        return
    assert bool(superlevel_contains(a, eps, [[y1, y2]])[0]) == (k >= a)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(1e-3, 0.3), st.floats(0.05, 0.95))
def test_ray_interval_endpoints_on_level(a, eps, frac):
    th = frac * _theta_max(a, eps)
    wm, wp, _ = _ray_roots(th, a, eps)
    for w in (wm, wp):
        r = math.sqrt(w)
        assert kernel_value([r * math.cos(th), r * math.sin(th)], eps)[0] == pytest.approx(a, rel=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(1.01, 3.0), st.floats(1e-5, 0.2))
def test_area_decreasing_in_level(a, factor, eps):
    assert superlevel_area(a * factor, eps) < superlevel_area(a, eps)


@pytest.mark.parametrize("eps,I", [(1e-3, 1.0), (1e-5, 4.0)])
def test_threshold_hits_mass(eps, I):
    r = superlevel_threshold(eps, I)
    assert r.area == pytest.approx(I, rel=1e-9)
    assert r.max_radius <= 10 * math.sqrt(I)


def test_threshold_exceeded_is_reported():
    with pytest.raises(ThresholdExceeded, match="threshold exceeded"):
        superlevel_threshold(20.0, 1.0)
    # a moderately large eps still gives a contained set
    assert superlevel_threshold(0.3, 1.0).max_radius < 10


def _set_polygon(a, eps, n=6000):
    # outer arc with increasing angle, then back along the inner arc: counterclockwise
    tmax = _theta_max(a, eps)
    th = 0.5 * tmax * (1 - np.cos(np.pi * np.linspace(0, 1, n)))[1:-1]
    wm, wp, _ = _ray_roots(th, a, eps)
    outer = np.column_stack([np.sqrt(wp) * np.cos(th), np.sqrt(wp) * np.sin(th)])
    inner = np.column_stack([np.sqrt(wm) * np.cos(th), np.sqrt(wm) * np.sin(th)])
    return np.vstack([outer, inner[::-1]])


@pytest.mark.parametrize("eps,I", [(1e-2, 1.0), (1e-3, 4.0)])
def test_approach_velocity_matches_contour_kernel(eps, I):
    # the extremal vorticity is sign(y1 y2) on the super-level set
    res = approach_velocity_extremal(eps, I)
    poly = _set_polygon(res.a_threshold, eps)
    u = velocity_batch(single_patch(poly), np.array([[-eps, 0.0], [eps, 0.0]]))
    assert u[0, 0] - u[1, 0] == pytest.approx(res.approach_velocity, rel=1e-4)


def test_ratio_tends_to_one():
    rows = extremal_sweep([1e-3, 1e-4, 1e-5, 1e-6], [1.0, 4.0])
    for I in (1.0, 4.0):
        dev = [abs(r["ratio"] - 1) for r in rows if r["I"] == I]
        assert all(b <= a + 1e-9 for a, b in zip(dev, dev[1:]))
    one = [r for r in rows if r["I"] == 1.0]
    assert 0.7 < one[0]["ratio"] < 1.3
    for r in rows:
        assert r["approach_velocity"] <= r["bound_value"]


def test_sweep_csv(tmp_path):
    rows = extremal_sweep([1e-3], [1.0])
    p = tmp_path / "s.csv"
    write_sweep_csv(p, rows)
    lines = p.read_text().splitlines()
    assert lines[0] == "# schema=1" and lines[1].startswith("eps,I,")


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-8, 1e-2), st.sampled_from([1.0, 4.0]))
def test_rate_bound_dominates_extremal(eps, I):
    v = approach_velocity_extremal(eps, I).approach_velocity
    assert rate_bound(2 * eps, None, ci_constant(1.0, I)) >= v


def test_rate_bound_branches():
    CI = 10.0
    assert rate_bound(1e-3, None, CI) == rate_bound(1e-3, 0, CI)
    # a large gradient (small m) is inactive when m < delta
    assert rate_bound(1e-3, 1e-6, CI) == rate_bound(1e-3, None, CI)
    assert rate_bound(1e-3, 0.1, CI) < rate_bound(1e-3, None, CI)
    with pytest.raises(ValueError):
        rate_bound(0.0, None, CI)
    with pytest.raises(ValueError):
        rate_bound(0.1, 2.0, CI)


def test_upper_bound_forms_agree():
    p = GrowthBoundParams(CI=5.0, grad0=10.0)
    t = np.linspace(0, 3, 7)
    L = math.log(10.0)
    want = L * np.exp(TWO_OVER_PI * t + 5.0 * (1 - np.exp(-TWO_OVER_PI * t)) / L)
    np.testing.assert_allclose(log_gradient_upper_bound(t, p), want, rtol=1e-13)
    np.testing.assert_allclose(np.log(gradient_upper_bound(t, p)), want, rtol=1e-13)
    assert gradient_upper_bound(0.0, p) == pytest.approx(10.0)
    assert gradient_upper_bound(50.0, p) == math.inf


def test_upper_bound_rate_limit():
    p = GrowthBoundParams(CI=1.0, grad0=math.e**2)
    t = 200.0
    assert log_log_gradient_upper_bound(t, p) / t == pytest.approx(TWO_OVER_PI, rel=0.02)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50), st.floats(1.5, 1e6), st.floats(0, 20), st.floats(0.01, 5))
def test_upper_bound_increasing(CI, g0, t, dt):
    p = GrowthBoundParams(CI=CI, grad0=g0)
    assert log_log_gradient_upper_bound(t + dt, p) > log_log_gradient_upper_bound(t, p)


def test_upper_bound_degenerate_start():
    with pytest.raises(ValueError):
        log_log_gradient_upper_bound(1.0, GrowthBoundParams(CI=1.0, grad0=1.0))


def _exact_history(CI, z0, ts):
    # ln G solving (ln G)' = 2/pi (ln G + CI) exactly
    return [(t, math.exp((z0 + CI) * math.exp(TWO_OVER_PI * t) - CI)) for t in ts]


def test_growth_check_accepts_extremal_solution():
    rep = check_growth_inequality(_exact_history(3.0, 2.0, np.linspace(0, 2, 41)), 3.0, slack=1e-9)
    assert rep.passed and rep.worst_margin >= 0 and rep.n_pairs == 40


def test_growth_check_flags_jump():
    hist = [(0.0, 10.0), (0.01, 10.0), (0.02, 1e6)]
    rep = check_growth_inequality(hist, 1.0)
    assert not rep.passed and len(rep.violations) == 1 and rep.worst_margin < 0


def test_growth_check_double_exponential_synthetic():
    # exp(exp(2t/pi)) grows exactly at the limiting rate, so ln G + CI keeps headroom
    ts = np.linspace(0, 5, 101)
    hist = [(t, math.exp(math.exp(TWO_OVER_PI * t))) for t in ts]
    rep = check_growth_inequality(hist, 0.01, slack=0.0)
    assert rep.passed


def test_growth_check_validation():
    with pytest.raises(ValueError):
        check_growth_inequality([(0, 1.0), (0, 2.0)], 1.0)
    with pytest.raises(ValueError):
        check_growth_inequality([(0, -1.0)], 1.0)
    assert check_growth_inequality([], 1.0).passed
    assert allowed_log_growth(0.5, 1.0, 2.0) == pytest.approx(2.0 * math.expm1(TWO_OVER_PI))
