import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cox_de_boor
from igabez.geometry import quarter_circle
from igabez.splines import (
    DomainError, KnotVector, bernstein_batch, bernstein_closed_form, bernstein_eval,
    bspline_curve_eval, bspline_eval, bspline_eval_all, insert_knot, knot_insertion_matrix,
    nurbs_basis_1d, nurbs_eval_1d, nurbs_eval_projective, open_knot_vector,
)

KNOT_VECTORS = [
    open_knot_vector(1, [0.5]),
    open_knot_vector(2, [0.3, 0.3, 0.8]),
    open_knot_vector(3, [0.2, 0.2, 0.7]),
    open_knot_vector(4, [0.1, 0.45, 0.45, 0.9]),
    open_knot_vector(2, [1.0, 2.5], bounds=(-1.0, 4.0)),
]


def interior_points(kv, m=40, seed=0):
    lo, hi = kv.bounds
    return np.random.default_rng(seed).uniform(lo, hi, m)


class TestKnotVector:
    def test_counts(self):
        kv = KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2)
        assert kv.n == 4
        assert kv.is_open
        np.testing.assert_array_equal(kv.unique(), [0, 0.5, 1])
        assert kv.multiplicity(0.0) == 3

    def test_not_open(self):
        assert not KnotVector([0, 1, 2, 3, 4, 5], 2).is_open

    @pytest.mark.parametrize("knots,p", [
        ([0, 0, 1, 0.5, 1, 1], 1),
        ([0, 0, 0, 0, 1, 1, 1], 2),
        ([0, 1], 1),
        ([0, 0, 1, 1], -1),
        ([0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1] + [1] * 12, 11),
    ])
    def test_rejected(self, knots, p):
        with pytest.raises(ValueError):
            KnotVector(knots, p)

    def test_immutable(self):
        kv = open_knot_vector(2)
        with pytest.raises(ValueError):
            kv.knots[0] = 5.0

    def test_find_span_closes_last_point(self):
        kv = open_knot_vector(2, [0.5])
        assert kv.find_span(1.0) == kv.find_span(0.99)
        with pytest.raises(DomainError):
            kv.find_span(1.0 + 1e-9)


class TestBernstein:
    def test_degree_zero(self):
        for x in (0.0, 0.3, 1.0):
            np.testing.assert_array_equal(bernstein_eval(0, x).values, [1.0])

    def test_endpoint(self):
        np.testing.assert_array_equal(bernstein_eval(2, 0.0).values, [1.0, 0.0, 0.0])

    def test_cubic_midpoint(self):
        np.testing.assert_allclose(bernstein_eval(3, 0.5).values, [0.125, 0.375, 0.375, 0.125],
                                   atol=1e-15)

    @pytest.mark.parametrize("p", range(0, 11))
    def test_against_binomial_formula(self, p):
        for x in np.linspace(0, 1, 13):
            np.testing.assert_allclose(bernstein_eval(p, x).values, bernstein_closed_form(p, x),
                                       atol=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 5])
    def test_derivative_fd(self, p):
        h = 1e-6
        for x in (0.2, 0.5, 0.77):
            fd = (bernstein_closed_form(p, x + h) - bernstein_closed_form(p, x - h)) / (2 * h)
            np.testing.assert_allclose(bernstein_eval(p, x).derivatives, fd, rtol=1e-6,
                                       atol=1e-8)

    def test_batch_matches_scalar(self):
        xs = np.linspace(0, 1, 7)
        v, d = bernstein_batch(4, xs)
        for i, x in enumerate(xs):
            b = bernstein_eval(4, x)
            np.testing.assert_allclose(v[i], b.values, atol=1e-15)
            np.testing.assert_allclose(d[i], b.derivatives, atol=1e-13)

    @pytest.mark.parametrize("x", [-0.1, 1.01])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            bernstein_eval(2, x)

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            bernstein_eval(-1, 0.5)

    @given(p=st.integers(0, 10), x=st.floats(0.0, 1.0))
    def test_partition_and_nonnegative(self, p, x):
        b = bernstein_eval(p, x)
        assert abs(b.values.sum() - 1.0) < 1e-13
        assert abs(b.derivatives.sum()) < 1e-12
        assert b.values.min() >= -1e-15


class TestBSpline:
    def test_single_span_equals_bernstein(self):
        kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
        np.testing.assert_allclose(bspline_eval(kv, 0.5).values, bernstein_eval(2, 0.5).values,
                                   atol=1e-15)

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_first_knot_interpolates(self, kv):
        b = bspline_eval(kv, kv.bounds[0])
        assert b.first_active == 0
        np.testing.assert_array_equal(b.values, np.eye(kv.degree + 1)[0])

    def test_brute_force_table(self):
        kv = KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2)
        full = bspline_eval_all(kv, 0.25)
        oracle = [cox_de_boor(kv.knots, 2, i, 0.25) for i in range(kv.n)]
        np.testing.assert_allclose(full, oracle, atol=1e-15)

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_against_recursion_everywhere(self, kv):
        xs = np.concatenate([interior_points(kv), kv.unique()])
        for x in xs:
            oracle = [cox_de_boor(kv.knots, kv.degree, i, x) for i in range(kv.n)]
            np.testing.assert_allclose(bspline_eval_all(kv, x), oracle, atol=1e-14)

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_derivative_fd_away_from_knots(self, kv):
        h = 1e-6
        u = kv.unique()
        for x in interior_points(kv, 15, seed=3):
            if np.min(np.abs(u - x)) < 1e-3:
                continue
            fd = (bspline_eval_all(kv, x + h) - bspline_eval_all(kv, x - h)) / (2 * h)
            b = bspline_eval(kv, x)
            full = np.zeros(kv.n)
            full[b.indices] = b.derivatives
            np.testing.assert_allclose(full, fd, rtol=1e-6, atol=1e-6 * max(1, np.abs(fd).max()))

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_local_support(self, kv):
        for x in interior_points(kv, 20, seed=5):
            full = bspline_eval_all(kv, x)
            for a in range(kv.n):
                if not kv.knots[a] <= x <= kv.knots[a + kv.degree + 1]:
                    assert full[a] == 0.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            bspline_eval(open_knot_vector(2), 1.5)

    @given(p=st.integers(1, 4), data=st.data())
    def test_partition_of_unity(self, p, data):
        interior = sorted(data.draw(st.lists(st.floats(0.01, 0.99), max_size=4)))
        kv = open_knot_vector(p, interior) if all(interior.count(v) <= p for v in interior) \
            else open_knot_vector(p)
        x = data.draw(st.floats(0.0, 1.0))
        b = bspline_eval(kv, x)
        assert len(b.values) == p + 1
        assert abs(b.values.sum() - 1.0) < 1e-13
        assert abs(b.derivatives.sum()) < 1e-10
        assert b.values.min() >= -1e-15


class TestKnotInsertion:
    def test_linear_midpoint(self):
        kv = KnotVector([0, 0, 1, 1], 1)
        new_kv, ctrl = insert_knot(kv, [[0.0, 0.0], [1.0, 0.0]], 0.5)
        np.testing.assert_allclose(ctrl, [[0, 0], [0.5, 0], [1, 0]], atol=1e-15)
        np.testing.assert_array_equal(new_kv.knots, [0, 0, 0.5, 1, 1])

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_curve_unchanged_and_counts(self, kv, rng):
        ctrl = rng.normal(size=(kv.n, 3))
        xbar = kv.bounds[0] + 0.37 * (kv.bounds[1] - kv.bounds[0])
        new_kv, new_ctrl = insert_knot(kv, ctrl, xbar)
        assert new_ctrl.shape[0] == kv.n + 1
        assert len(new_kv.knots) == len(kv.knots) + 1
        for x in np.linspace(*kv.bounds, 50):
            np.testing.assert_allclose(bspline_curve_eval(new_kv, new_ctrl, x)[0],
                                       bspline_curve_eval(kv, ctrl, x)[0], atol=1e-12)

    def test_rows_are_convex_combinations(self):
        _, a = knot_insertion_matrix(open_knot_vector(3, [0.4]), 0.6)
        np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-15)
        assert a.min() >= 0.0

    @pytest.mark.parametrize("x", [0.0, 1.0, -0.5])
    def test_endpoint_rejected(self, x):
        with pytest.raises(ValueError):
            knot_insertion_matrix(open_knot_vector(2), x)

    def test_multiplicity_overflow(self):
        kv = open_knot_vector(2, [0.5, 0.5, 0.5])
        with pytest.raises(ValueError):
            knot_insertion_matrix(kv, 0.5)


class TestNurbsCurve:
    def test_quarter_circle_radius(self):
        kv, ctrl, w = quarter_circle()
        for x in np.linspace(0, 1, 100):
            pt, _ = nurbs_eval_1d(kv, ctrl, w, x)
            assert abs(np.linalg.norm(pt) - 1.0) < 1e-12

    def test_unit_weights_reduce_to_bspline(self, rng):
        kv = KNOT_VECTORS[2]
        ctrl = rng.normal(size=(kv.n, 2))
        for x in interior_points(kv, 20):
            np.testing.assert_allclose(nurbs_eval_1d(kv, ctrl, np.ones(kv.n), x)[0],
                                       bspline_curve_eval(kv, ctrl, x)[0], atol=1e-14)

    @pytest.mark.parametrize("kv", KNOT_VECTORS)
    def test_rational_vs_projective(self, kv, rng):
        ctrl = rng.normal(size=(kv.n, 2))
        w = rng.uniform(0.3, 2.0, kv.n)
        for x in interior_points(kv, 25):
            p1, t1 = nurbs_eval_1d(kv, ctrl, w, x)
            p2, t2 = nurbs_eval_projective(kv, ctrl, w, x)
            np.testing.assert_allclose(p1, p2, atol=1e-13)
            np.testing.assert_allclose(t1, t2, atol=1e-11)

    def test_tangent_fd(self):
        kv, ctrl, w = quarter_circle(2.0)
        h = 1e-6
        for x in (0.1, 0.5, 0.9):
            fd = (nurbs_eval_1d(kv, ctrl, w, x + h)[0] - nurbs_eval_1d(kv, ctrl, w, x - h)[0]) / (2 * h)
            np.testing.assert_allclose(nurbs_eval_1d(kv, ctrl, w, x)[1], fd, rtol=1e-6)

    def test_bad_weights(self):
        kv, ctrl, _ = quarter_circle()
        with pytest.raises(ValueError):
            nurbs_eval_1d(kv, ctrl, [1.0, 0.0, 1.0], 0.5)

    @given(x=st.floats(0.0, 1.0))
    def test_rational_partition(self, x):
        kv = KNOT_VECTORS[3]
        w = np.linspace(0.5, 1.5, kv.n)
        r = nurbs_basis_1d(kv, w, x)
        assert abs(r.sum() - 1.0) < 1e-13
        assert r.min() >= -1e-15
