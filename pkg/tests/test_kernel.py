import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from eulerlab.battery import b_grid, b_samples, fit_remainder_constant, remainder_constant, rectangle, regular_polygon, standard_battery
from eulerlab.kernel import (Patch, VorticityField, domain_difference_integral, extract_b,
                             remainder_weight, main_term, read_patch_file, single_patch,
                             velocity_batch, velocity_contour, velocity_direct, write_patch_file)
from eulerlab.quadrature import QuadratureSpec

coord = st.floats(0.01, 0.9)


def _free_disc(center, R, n=4000, strength=1.0):
    return single_patch(regular_polygon(center, R, n), strength, odd_x1=False, odd_x2=False)


def test_free_disc_rigid_rotation_inside():
    # u = (d2, -d1) psi with psi' = r/2 inside a unit-vorticity disc
    f = _free_disc((0.0, 0.0), 1.0)
    x = np.array([[0.1, 0.2], [-0.3, 0.4]])
    u = velocity_batch(f, x)
    np.testing.assert_allclose(u, 0.5 * np.column_stack([x[:, 1], -x[:, 0]]), atol=1e-6)


def test_free_disc_point_vortex_outside():
    R = 0.5
    f = _free_disc((0.0, 0.0), R)
    x = np.array([[1.0, 0.5], [-2.0, 0.3]])
    r2 = (x**2).sum(axis=1)
    want = 0.5 * R * R * np.column_stack([x[:, 1], -x[:, 0]]) / r2[:, None]
    np.testing.assert_allclose(velocity_batch(f, x), want, rtol=1e-5)


def _explicit_images(contour, strength=1.0):
    c = np.asarray(contour, float)
    refl = [(c, strength), (c[::-1] * [-1, 1], -strength),
            (c[::-1] * [1, -1], -strength), (c * [-1, -1], strength)]
    return VorticityField(tuple(Patch(q, s, False, False) for q, s in refl))


@settings(max_examples=30, deadline=None)
@given(st.tuples(coord, coord), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_images_match_explicit_reflections(corner, x1, x2):
    c = rectangle(corner[0], corner[0] + 0.3, corner[1], corner[1] + 0.2)
    odd = single_patch(c)
    expl = _explicit_images(c)
    p = np.array([[x1, x2]])
    np.testing.assert_allclose(velocity_batch(odd, p), velocity_batch(expl, p), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2))
def test_axis_conditions_exact(a, b):
    f = standard_battery()["corner_square"]
    u = velocity_batch(f, np.array([[0.0, a], [b, 0.0]]))
    assert u[0, 0] == 0.0 and u[1, 1] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.tuples(coord, coord), coord, coord)
def test_transpose_symmetry(corner, y1, y2):
    # swapping coordinates reflects the flow: u'(x) = -T u(T x)
    f = single_patch(rectangle(corner[0], corner[0] + 0.2, corner[1], corner[1] + 0.35))
    x = np.array([[y1, y2]])
    u = velocity_batch(f, x[:, ::-1])[0]
    ut = velocity_batch(f.transposed(), x)[0]
    np.testing.assert_allclose(ut, -u[::-1], atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.tuples(st.floats(0.05, 0.5), st.floats(0.05, 0.5)), st.floats(0.02, 0.6), st.floats(0.02, 0.6))
def test_contour_matches_direct(corner, y1, y2):
    c = rectangle(corner[0], corner[0] + 0.25, corner[1], corner[1] + 0.15)
    f = single_patch(c)
    x = np.array([y1, y2])
    gap = min(abs(y1 - corner[0]), abs(y1 - corner[0] - 0.25), abs(y2 - corner[1]), abs(y2 - corner[1] - 0.15))
    if gap < 1e-3:
        return
    ud, err = velocity_direct(f, x, QuadratureSpec(1e-10, 1e-12, 40), full_output=True)
    uc = velocity_contour(f, x)
    assert np.linalg.norm(uc - ud) <= 1e-6 * max(np.linalg.norm(ud), 1e-3)


def test_direct_rejects_vertex():
    f = single_patch(rectangle(0.1, 0.2, 0.1, 0.2))
    with pytest.raises(ValueError):
        velocity_direct(f, np.array([0.1, 0.1]))


def test_threaded_equals_sequential():
    f = standard_battery()["mixed_pair"]
    pts = np.random.default_rng(1).uniform(0, 1, (500, 2))
    assert np.array_equal(velocity_batch(f, pts), velocity_batch(f, pts, sequential=True))


def test_patch_validation():
    with pytest.raises(ValueError):
        Patch(rectangle(0, 1, 0, 1)[::-1])          # clockwise
    with pytest.raises(ValueError):
        Patch(rectangle(0, 1, 0, 1), strength=1.5)
    with pytest.raises(ValueError):
        Patch(rectangle(-1, 1, 0, 1))               # leaves the quadrant
    bow = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float)
    with pytest.raises(ValueError):
        Patch(np.vstack([bow, [[0.5, 2.0]]])).validate()
    two = VorticityField((Patch(rectangle(0, 1, 0, 1)), Patch(rectangle(0.5, 1.5, 0.5, 1.5))))
    with pytest.raises(ValueError):
        two.validate()


def test_total_l1_counts_images():
    f = single_patch(rectangle(0, 1, 0, 2), strength=-0.5)
    assert f.total_l1 == pytest.approx(4 * 2 * 0.5)


def test_patch_file_round_trip(tmp_path):
    f = standard_battery()["mixed_pair"]
    p = tmp_path / "pair.txt"
    write_patch_file(p, f)
    g = read_patch_file(p)
    assert len(g.patches) == 2
    for a, b in zip(f.patches, g.patches):
        assert np.array_equal(a.contour, b.contour) and a.strength == b.strength


def test_domain_difference_closed_form():
    # the two strips each give ln(17)/4; their overlap is the square (r/2, 2r)^2
    sq, _ = dblquad(lambda y, x: x * y / (x * x + y * y) ** 2, 0.5, 2.0, 0.5, 2.0, epsabs=1e-13)
    want = 0.5 * math.log(17) - sq
    assert domain_difference_integral((0.6, 0.8)) == pytest.approx(want, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-6, 10.0), st.floats(0, math.pi / 2))
def test_domain_difference_scale_invariant_and_bounded(r, th):
    v, err = domain_difference_integral((r * math.cos(th), r * math.sin(th)), full_output=True)
    assert 0 <= v <= 8 and err < 1e-3
    assert v == pytest.approx(domain_difference_integral((1.0, 0.0)), rel=1e-9)


def test_main_term_far_patch_oracle():
    f = standard_battery()["far_square"]
    val, _ = dblquad(lambda y, x: x * y / (x * x + y * y) ** 2, 1, 2, 1, 2, epsabs=1e-13)
    assert main_term(f, (0.3, 0.4)) == pytest.approx(4 / math.pi * val, rel=1e-9)


def test_main_term_excludes_inner_disc():
    f = single_patch(rectangle(0.0, 1.0, 0.0, 1.0))
    # points of the square beyond radius sqrt(2) do not exist
    assert main_term(f, (1.0, 1.0 + 1e-9)) == pytest.approx(0.0, abs=1e-8)


def test_b_reconstructs_velocity():
    f = standard_battery()["profile_region"]
    x = np.array([0.05, 0.02])
    u = velocity_contour(f, x)
    b1, b2 = extract_b(f, x)
    m = main_term(f, x)
    assert b1 + m == pytest.approx(-u[0] / x[0], rel=1e-12)
    assert b2 + m == pytest.approx(u[1] / x[1], rel=1e-12)


def test_remainder_weights():
    w1, w2 = remainder_weight((1.0, 1.0))
    assert w1 == w2 == pytest.approx(1 + math.log(2))


def test_remainder_fit_small_grid():
    C_fit, samples = fit_remainder_constant(points=b_grid(5))
    assert 0 < C_fit <= 50
    assert set(samples) == set(standard_battery())
    worst = max(np.max(np.abs(s[:, 2:4]) / s[:, 4:6]) for s in samples.values())
    assert C_fit == pytest.approx(1.5 * worst)
    assert remainder_constant(C_fit) >= 1
    rows = b_samples(standard_battery()["far_square"], b_grid(3))
    assert rows.shape == (9, 6)
