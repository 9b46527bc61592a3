import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from eulerlab.regions import (E_INV, E_INV4, DomainError, NoAdmissibleS0, Point, ProfileConstants,
                              ci_constant, compute_h, d_region_contains, d_region_integral,
                              derive_constants, eval_f, eval_g, eval_g_prime, find_s0,
                              inner_radius, omega_area, omega_region_contains,
                              omega_region_contains_many, q_region_contains,
                              sample_omega_boundary, shoelace_area)
from eulerlab.quadrature import QuadratureSpec

log_s = st.floats(min_value=math.log(1e-300), max_value=-1.0)


def g_mp(s):
    s = mp.mpf(s)
    return s * mp.exp(mp.sqrt(abs(mp.log(s))))


@pytest.mark.parametrize("s", [E_INV, 1e-2, 1e-8, 1e-50, 1e-300])
def test_g_matches_high_precision(s):
    assert eval_g(s) == pytest.approx(float(g_mp(s)), rel=1e-14)


@pytest.mark.parametrize("s", [E_INV, 1e-3, 1e-20])
def test_g_prime_matches_derivative(s):
    with mp.workdps(40):
        assert eval_g_prime(s) == pytest.approx(float(mp.diff(g_mp, s)), rel=1e-12)


def test_g_endpoint_value():
    assert eval_g(E_INV) == pytest.approx(1.0, rel=1e-15)


def test_domain_errors():
    for bad in (0.0, -1.0, 0.5, math.nan):
        with pytest.raises(DomainError):
            eval_g(bad)
    with pytest.raises(DomainError):
        eval_f(1.0)
    with pytest.raises(DomainError):
        compute_h(0.1)


@settings(max_examples=200, deadline=None)
@given(log_s)
def test_profile_inequalities(ls):
    s = math.exp(ls)
    g, gp = eval_g(s), eval_g_prime(s)
    assert g > s
    assert 1 < gp < g / s
    assert eval_f(s) >= 1 + math.log1p(g / s)


@settings(max_examples=100, deadline=None)
@given(log_s, log_s)
def test_g_increasing(a, b):
    if a != b:
        lo, hi = sorted((math.exp(a), math.exp(b)))
        if lo < hi:
            assert eval_g(lo) < eval_g(hi)


@pytest.mark.parametrize("k", range(4, 15))
def test_log_g_ratio_limit(k):
    s = 10.0**-k
    L = -math.log(s)
    assert abs(1 + math.log(eval_g(s)) / L) <= L**-0.5 + 1e-12


def test_region_predicates_use_open_sets():
    eps = 1e-3
    assert omega_region_contains(eps, (0.1, 0.1))
    assert not omega_region_contains(eps, (eps, 0.1))
    assert not omega_region_contains(eps, (0.1, 0.0))
    assert not omega_region_contains(eps, (0.1, eval_g(0.1)))
    assert not omega_region_contains(eps, (E_INV, 0.1))
    assert q_region_contains(1.0, (1.0, 0.5)) and not q_region_contains(1.0, (0.6, 0.8))
    with pytest.raises(DomainError):
        q_region_contains(0.0, (1, 1))
    s = 1e-4
    r = inner_radius(s)
    assert d_region_contains(s, (0.1, 0.1))
    assert not d_region_contains(s, (0.5 * r, 0.5 * r))
    assert not d_region_contains(s, (0.3, 0.3))   # outside the ball of radius 1/e


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 0.5), st.floats(0, 1.5)), min_size=1, max_size=20))
def test_vectorized_contains_matches_scalar(pts):
    eps = 1e-2
    many = omega_region_contains_many(eps, pts)
    assert many.tolist() == [omega_region_contains(eps, p) for p in pts]


def test_point_reflections():
    p = Point(0.2, 0.3)
    assert p.reflect_x1 == Point(-0.2, 0.3) and p.reflect_x2 == Point(0.2, -0.3)


def _h_oracle(s):
    # cartesian iterated integral: the y-integral of x*y/|y|^4 is -x/(2|y|^2);
    # the x-integral is split where the limits change formula
    rho = inner_radius(s)
    x_star = brentq(lambda x: x * x + eval_g(x) ** 2 - E_INV**2, s, E_INV)
    lo = lambda x: math.sqrt(max(rho * rho - x * x, 0.0))
    hi = lambda x: min(eval_g(x), math.sqrt(max(E_INV**2 - x * x, 0.0)))
    inner = lambda x: 0.5 * x * (1 / (x * x + lo(x) ** 2) - 1 / (x * x + hi(x) ** 2))
    knots = [s, rho, x_star, E_INV]
    val = sum(quad(inner, a, b, epsabs=0, epsrel=1e-12, limit=200)[0] for a, b in zip(knots, knots[1:]))
    return 4 / math.pi * val / abs(math.log(s))


@pytest.mark.parametrize("s", [E_INV4, 1e-4])
def test_h_matches_cartesian_oracle(s):
    assert compute_h(s) == pytest.approx(_h_oracle(s), rel=1e-9)


def test_h_positive_and_error_reported():
    h, err = compute_h(1e-8, full_output=True)
    assert h > 0 and 0 <= err < 1e-10
    tight = compute_h(1e-8, QuadratureSpec(1e-13, 1e-15, 40))
    assert abs(tight - h) <= max(10 * err, 1e-12)


def test_h_deviation_shrinks():
    dev = [abs(compute_h(10.0**-k) - 2 / math.pi) for k in range(4, 13)]
    assert all(b < a for a, b in zip(dev, dev[1:]))


def test_find_s0_on_coarse_grid():
    grid = np.logspace(math.log10(E_INV4), -60, 60)
    s0 = find_s0(1.0, grid=grid)
    below = grid[grid <= s0]
    assert all(d_region_integral(s) >= eval_f(s) for s in below)
    above = grid[grid > s0]
    if len(above):
        assert d_region_integral(above[-1]) < eval_f(above[-1])
    with pytest.raises(NoAdmissibleS0):
        find_s0(1e6, grid=grid[:5])
    with pytest.raises(ValueError):
        find_s0(1.0, grid=grid[::-1])


def test_derived_constants_formulas():
    k = derive_constants(1.0, 1.0, E_INV4)
    assert k.rho0 == pytest.approx(E_INV4 / 4)
    # g(s0)/s0 = e^2 at s0 = e^-4
    e2 = math.e**2
    assert k.Cprime == pytest.approx(e2 * (1 + math.log(1 + e2)), rel=1e-14)
    assert k.Cprime == pytest.approx(23.105, abs=1e-3)
    assert k.CI == pytest.approx(ci_constant(1.0, 1.0))
    assert ci_constant(1.0, 1.0) == pytest.approx(math.log(2) + math.log(10) + 4.5 * math.pi)
    assert k.barrier_rate == pytest.approx(k.Cprime * k.s0 / k.rho0)
    with pytest.raises(ValueError):
        ProfileConstants(C=1.0, s0=E_INV4, rho0=1.0, Cprime=k.Cprime, I=1.0, CI=k.CI)
    with pytest.raises(DomainError):
        derive_constants(0.5, 1.0, E_INV4)


def test_rho0_chain():
    k = derive_constants(1.0, 1.0, 1e-6)
    s = np.geomspace(k.s0, E_INV, 200)
    assert k.rho0 <= np.min(eval_g(s) / eval_g_prime(s) - s)


@pytest.mark.parametrize("eps", [E_INV4, 1e-3, 1e-8])
def test_boundary_sampling(eps):
    c = sample_omega_boundary(eps, 200)
    assert len(c) == 200
    assert tuple(c[0]) == (eps, 0.0)
    assert shoelace_area(c) > 0
    graph = (c[:, 0] > eps) & (c[:, 1] > 0) & (c[:, 0] < E_INV)
    np.testing.assert_allclose(c[graph, 1], eval_g(c[graph, 0]), rtol=1e-14)
    assert np.all(c >= 0)


def test_omega_area_against_polygon():
    eps = E_INV4
    c = sample_omega_boundary(eps, 4000)
    assert shoelace_area(c) == pytest.approx(omega_area(eps), rel=1e-4)
    assert shoelace_area(c) <= omega_area(eps)   # chords of a concave graph lie below it
