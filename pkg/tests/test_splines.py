"""Tests for B-spline/NURBS basis evaluation, knot insertion, and geometry."""

import numpy as np
import pytest

from casrod import (
    KnotVector,
    NurbsCurve,
    bspline_basis,
    evaluate_geometry,
    greville_abscissae,
    insert_knot,
    make_open_uniform_knot_vector,
    nurbs_basis,
    refine_uniform,
)
from casrod.errors import OutOfDomainError
from casrod.splines import (
    arc_length_at,
    arc_lengths_at,
    bspline_basis_many,
    element_arc_lengths,
    nurbs_basis_many,
)

from conftest import CONIC_W


def naive_cox_de_boor(t, p, i, xi):
    """Independent straightforward recursion (0/0 replaced by 0)."""
    if p == 0:
        return 1.0 if t[i] <= xi < t[i + 1] else 0.0
    left = 0.0
    if t[i + p] - t[i] > 0:
        left = (xi - t[i]) / (t[i + p] - t[i]) * naive_cox_de_boor(t, p - 1, i, xi)
    right = 0.0
    if t[i + p + 1] - t[i + 1] > 0:
        right = (t[i + p + 1] - xi) / (t[i + p + 1] - t[i + 1]) * naive_cox_de_boor(t, p - 1, i + 1, xi)
    return left + right


class TestKnotVector:
    def test_single_element(self):
        kv = make_open_uniform_knot_vector(2, 1)
        np.testing.assert_array_equal(kv.knots, [0, 0, 0, 1, 1, 1])

    def test_two_elements(self):
        kv = make_open_uniform_knot_vector(2, 2)
        np.testing.assert_array_equal(kv.knots, [0, 0, 0, 0.5, 1, 1, 1])

    def test_counting_identity(self):
        kv = make_open_uniform_knot_vector(2, 4)
        spans = np.diff(kv.breakpoints)
        np.testing.assert_allclose(spans, 0.25)
        assert kv.n_basis == 4 + 2
        assert kv.n_elements == 4

    def test_invalid_arguments(self):
        with pytest.raises(ValueError, match="degree"):
            make_open_uniform_knot_vector(0, 4)
        with pytest.raises(ValueError, match="n_elements"):
            make_open_uniform_knot_vector(2, 0)

    def test_rejects_non_open(self):
        with pytest.raises(ValueError, match="open"):
            KnotVector(2, [0, 0, 0.2, 0.5, 1, 1, 1])

    def test_rejects_repeated_interior(self):
        with pytest.raises(ValueError, match="interior"):
            KnotVector(2, [0, 0, 0, 0.5, 0.5, 1, 1, 1])

    def test_rejects_decreasing(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            KnotVector(2, [0, 0, 0, 0.6, 0.4, 1, 1, 1])

    def test_find_span_right_end(self):
        kv = make_open_uniform_knot_vector(2, 4)
        assert kv.find_span(1.0) == kv.find_span(0.99)


class TestBsplineBasis:
    def test_bernstein_midpoint(self):
        kv = make_open_uniform_knot_vector(2, 1)
        be = bspline_basis(kv, 0.5)
        np.testing.assert_allclose(be.values, [0.25, 0.5, 0.25], atol=1e-15)

    def test_bernstein_endpoint_derivatives(self):
        kv = make_open_uniform_knot_vector(2, 1)
        be = bspline_basis(kv, 0.0)
        np.testing.assert_allclose(be.values, [1.0, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(be.d1, [-2.0, 2.0, 0.0], atol=1e-15)

    def test_against_naive_recursion(self):
        kv = KnotVector(2, [0, 0, 0, 0.5, 1, 1, 1])
        xi = 0.25
        be = bspline_basis(kv, xi)
        expected = [naive_cox_de_boor(kv.knots, 2, i, xi)
                    for i in range(be.first_active, be.first_active + 3)]
        np.testing.assert_allclose(be.values, expected, atol=1e-14)
        assert abs(be.values.sum() - 1.0) < 1e-14
        assert abs(be.d1.sum()) < 1e-13

    def test_against_naive_recursion_many_points(self):
        kv = make_open_uniform_knot_vector(3, 5)
        rng = np.random.default_rng(7)
        for xi in rng.uniform(0, 0.999, 25):
            be = bspline_basis(kv, xi)
            expected = [naive_cox_de_boor(kv.knots, 3, i, xi)
                        for i in range(be.first_active, be.first_active + 4)]
            np.testing.assert_allclose(be.values, expected, atol=1e-13)

    def test_derivatives_match_finite_differences(self):
        kv = make_open_uniform_knot_vector(2, 4)
        h = 1e-6
        for xi in (0.1, 0.33, 0.62, 0.9):
            plus = bspline_basis(kv, xi + h).values
            minus = bspline_basis(kv, xi - h).values
            d1 = bspline_basis(kv, xi).d1
            np.testing.assert_allclose(d1, (plus - minus) / (2 * h), rtol=1e-6, atol=1e-6)

    def test_second_derivative_matches_finite_differences(self):
        kv = make_open_uniform_knot_vector(2, 4)
        h = 1e-6
        for xi in (0.1, 0.33, 0.62, 0.9):
            plus = bspline_basis(kv, xi + h).d1
            minus = bspline_basis(kv, xi - h).d1
            d2 = bspline_basis(kv, xi).d2
            np.testing.assert_allclose(d2, (plus - minus) / (2 * h), rtol=1e-5, atol=1e-5)

    def test_out_of_domain(self):
        kv = make_open_uniform_knot_vector(2, 2)
        with pytest.raises(OutOfDomainError):
            bspline_basis(kv, 1.2)
        with pytest.raises(OutOfDomainError):
            bspline_basis(kv, -0.1)

    def test_batch_matches_scalar(self):
        kv = make_open_uniform_knot_vector(2, 6)
        rng = np.random.default_rng(3)
        xis = np.concatenate([rng.uniform(0, 1, 40), [0.0, 1.0], kv.breakpoints[1:-1]])
        batch = bspline_basis_many(kv, xis)
        for i, xi in enumerate(xis):
            be = bspline_basis(kv, float(xi))
            assert batch.first_active[i] == be.first_active
            np.testing.assert_array_equal(batch.values[i], be.values)
            np.testing.assert_array_equal(batch.d1[i], be.d1)
            np.testing.assert_array_equal(batch.d2[i], be.d2)


class TestNurbsBasis:
    def test_equal_weights_reduce_to_bspline(self, quarter_circle):
        curve = NurbsCurve(quarter_circle.knot_vector, quarter_circle.control_points,
                           np.full(3, 2.5))
        for xi in (0.0, 0.3, 0.75, 1.0):
            rational = nurbs_basis(curve, xi)
            poly = bspline_basis(curve.knot_vector, xi)
            np.testing.assert_allclose(rational.values, poly.values, atol=1e-15)
            np.testing.assert_allclose(rational.d1, poly.d1, atol=1e-13)
            np.testing.assert_allclose(rational.d2, poly.d2, atol=1e-12)

    def test_quarter_circle_midpoint_values(self, quarter_circle):
        # hand evaluation of the rational quotient at xi = 0.5
        be = nurbs_basis(quarter_circle, 0.5)
        denom = 0.25 + 0.5 * CONIC_W + 0.25
        np.testing.assert_allclose(
            be.values, [0.25 / denom, 0.5 * CONIC_W / denom, 0.25 / denom], atol=1e-14)
        assert abs(be.values.sum() - 1.0) < 1e-14

    def test_partition_of_unity_random_weights(self):
        rng = np.random.default_rng(42)
        kv = make_open_uniform_knot_vector(2, 5)
        for _ in range(5):
            weights = rng.uniform(0.2, 3.0, kv.n_basis)
            pts = rng.uniform(0.2, 1.2, (kv.n_basis, 2))
            curve = NurbsCurve(kv, pts, weights)
            for xi in rng.uniform(0, 1, 200):
                be = nurbs_basis(curve, float(xi))
                assert abs(be.values.sum() - 1.0) < 1e-12
                assert abs(be.d1.sum()) < 1e-12
                assert abs(be.d2.sum()) < 1e-10

    def test_batch_matches_scalar(self, quarter_ellipse):
        rng = np.random.default_rng(5)
        xis = rng.uniform(0, 1, 30)
        batch = nurbs_basis_many(quarter_ellipse, xis)
        for i, xi in enumerate(xis):
            be = nurbs_basis(quarter_ellipse, float(xi))
            np.testing.assert_array_equal(batch.values[i], be.values)
            np.testing.assert_array_equal(batch.d1[i], be.d1)
            np.testing.assert_array_equal(batch.d2[i], be.d2)


class TestGeometry:
    def test_ellipse_midpoint(self, quarter_ellipse):
        point, _, _ = evaluate_geometry(quarter_ellipse, 0.5)
        np.testing.assert_allclose(point, [-np.sqrt(2), np.sqrt(2) / 2], atol=1e-14)

    def test_ellipse_on_conic(self, quarter_ellipse):
        for xi in np.linspace(0, 1, 100):
            x, y = evaluate_geometry(quarter_ellipse, float(xi))[0]
            assert abs(x**2 / 4 + y**2 - 1.0) < 1e-12

    def test_circle_radius(self, quarter_circle):
        for xi in np.linspace(0, 1, 100):
            point, _, _ = evaluate_geometry(quarter_circle, float(xi))
            assert abs(np.hypot(*point) - 1.0) < 1e-12

    def test_straight_segment_zero_normal_curvature(self, straight_rod_4):
        for xi in np.linspace(0.05, 0.95, 10):
            _, d1, d2 = evaluate_geometry(straight_rod_4, float(xi))
            tangent = d1 / np.hypot(*d1)
            normal_component = d2 - tangent * (tangent @ d2)
            np.testing.assert_allclose(normal_component, 0.0, atol=1e-12)


class TestRefinement:
    def test_geometry_preserved(self, quarter_circle):
        refined = refine_uniform(quarter_circle)
        assert refined.n_elements == 2
        for xi in np.linspace(0, 1, 100):
            before = evaluate_geometry(quarter_circle, float(xi))[0]
            after = evaluate_geometry(refined, float(xi))[0]
            np.testing.assert_allclose(after, before, atol=1e-12)

    def test_counting(self, quarter_ellipse):
        refined = refine_uniform(refine_uniform(quarter_ellipse))
        assert refined.n_elements == 4
        assert refined.n_basis == quarter_ellipse.n_basis + 1 + 2

    def test_seven_refinements_reach_256(self, quarter_circle):
        curve = refine_uniform(quarter_circle)  # the studies start from 2 elements
        for _ in range(7):
            curve = refine_uniform(curve)
        assert curve.n_elements == 256

    def test_knots_nested(self, quarter_circle):
        refined = refine_uniform(refine_uniform(quarter_circle))
        old = set(np.round(refine_uniform(quarter_circle).knot_vector.knots, 15))
        new = set(np.round(refined.knot_vector.knots, 15))
        assert old <= new

    def test_insert_existing_knot_rejected(self, quarter_circle):
        refined = refine_uniform(quarter_circle)
        with pytest.raises(ValueError, match="already present"):
            insert_knot(refined, 0.5)


class TestArcLength:
    def test_quarter_circle_length(self, quarter_circle):
        lengths = element_arc_lengths(quarter_circle)
        np.testing.assert_allclose(lengths[-1], np.pi / 2, rtol=1e-12)

    def test_cumulative_consistency(self, quarter_ellipse):
        curve = refine_uniform(refine_uniform(quarter_ellipse))
        boundary = element_arc_lengths(curve)
        xis = np.linspace(0, 1, 17)
        s = arc_lengths_at(curve, xis, boundary)
        assert np.all(np.diff(s) > 0)
        assert abs(s[0]) < 1e-15
        np.testing.assert_allclose(s[-1], boundary[-1], rtol=1e-12)
        # scalar wrapper agrees
        assert arc_length_at(curve, 0.37, boundary) == pytest.approx(
            float(arc_lengths_at(curve, [0.37], boundary)[0]))


class TestGreville:
    def test_linear_precision(self):
        kv = make_open_uniform_knot_vector(2, 5)
        greville = greville_abscissae(kv)
        for xi in np.linspace(0, 1, 20):
            be = bspline_basis(kv, float(xi))
            active = greville[be.first_active:be.first_active + 3]
            assert abs(be.values @ active - xi) < 1e-13
