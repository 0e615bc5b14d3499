import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igabez.extraction import (
    bernstein_tensor, build_topo_mesh, eval_bezier_geometry, eval_elements, extract_1d,
    extract_patch, local_to_param,
)
from igabez.geometry import NurbsPatch, basis_many, patch_points, quarter_annulus, unit_square
from igabez.splines import KnotVector, bernstein_batch, bspline_eval_all, open_knot_vector


def extracted_values_1d(ext, kv, x):
    """Global values at x rebuilt from the extraction operators."""
    e = int(np.clip(np.searchsorted(ext.bounds[:, 1], x, side="right"), 0, ext.n_elements - 1))
    a, b = ext.bounds[e]
    bern, _ = bernstein_batch(kv.degree, [(x - a) / (b - a)])
    out = np.zeros(kv.n)
    out[ext.first_active[e]: ext.first_active[e] + kv.degree + 1] = ext.operators[e] @ bern[0]
    return out


class TestExtract1D:
    def test_no_interior_knots(self):
        ext = extract_1d(open_knot_vector(2))
        assert ext.n_elements == 1
        np.testing.assert_array_equal(ext.operators[0], np.eye(3))

    def test_one_interior_knot(self):
        kv = KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2)
        ext = extract_1d(kv)
        assert ext.n_elements == 2
        errs = [np.abs(extracted_values_1d(ext, kv, x) - bspline_eval_all(kv, x)).max()
                for x in np.linspace(0, 1, 100)]
        assert max(errs) < 1e-12
        # Known operators of the uniform quadratic case.
        np.testing.assert_allclose(ext.operators[0], [[1, 0, 0], [0, 1, 0.5], [0, 0, 0.5]])

    def test_repeated_interior_knots(self):
        kv = open_knot_vector(3, [0.2, 0.2, 0.7])
        ext = extract_1d(kv)
        assert ext.n_elements == 3
        for x in np.linspace(0, 1, 101):
            np.testing.assert_allclose(extracted_values_1d(ext, kv, x), bspline_eval_all(kv, x),
                                       atol=1e-12)

    def test_full_multiplicity_gives_identity(self):
        kv = open_knot_vector(2, [0.5, 0.5])
        for op in extract_1d(kv).operators:
            np.testing.assert_allclose(op, np.eye(3), atol=1e-15)

    def test_not_open(self):
        with pytest.raises(ValueError):
            extract_1d(KnotVector([0, 1, 2, 3, 4, 5], 2))

    @given(p=st.integers(1, 4),
           interior=st.lists(st.sampled_from([0.1, 0.25, 0.5, 0.6, 0.9]), max_size=6))
    def test_column_sums_and_sign(self, p, interior):
        interior = [v for v in sorted(interior) if interior.count(v) <= p]
        ext = extract_1d(open_knot_vector(p, interior))
        np.testing.assert_allclose(ext.operators.sum(axis=1), 1.0, atol=1e-12)
        assert ext.operators.min() >= -1e-14
        assert np.sum(ext.bounds[:, 1] - ext.bounds[:, 0]) == pytest.approx(1.0, abs=1e-12)


def wavy(degrees, seed=0):
    rng = np.random.default_rng(seed)
    ints = [[0.3, 0.3, 0.55], [0.5], [0.25, 0.75]]
    kvs = [open_knot_vector(p, [v for v in ints[d] if ints[d].count(v) <= p])
           for d, p in enumerate(degrees)]
    n = int(np.prod([kv.n for kv in kvs]))
    return NurbsPatch(kvs, rng.normal(size=(n, 3)), rng.uniform(0.5, 2.0, n))


class TestExtractPatch:
    def test_demo_counts(self, demo):
        bm = extract_patch(demo)
        assert bm.shape == (3, 4)
        assert bm.n_elements == 12
        assert bm.n_local == 9
        np.testing.assert_array_equal(np.unique(bm.conn), np.arange(30))

    def test_single_element(self):
        bm = extract_patch(unit_square((2, 2)))
        assert bm.n_elements == 1
        np.testing.assert_allclose(bm.operators[0], np.eye(9))

    @pytest.mark.parametrize("degrees", [(2, 2), (1, 3), (2, 1, 2)])
    def test_identity_against_global_basis(self, degrees):
        patch = wavy(degrees)
        bm = extract_patch(patch)
        # Interior samples only: one-sided derivatives differ at C0 element edges.
        z1 = np.linspace(0.05, 0.95, 5)
        zs = np.stack(np.meshgrid(*[z1] * patch.dim, indexing="ij"), -1).reshape(-1, patch.dim)
        ev = eval_elements(bm, zs)
        for k, e in enumerate(ev.elements):
            xi = local_to_param(bm, e, zs)
            active, vals, grads = basis_many(patch, xi)
            dense = np.zeros((len(zs), patch.n_basis))
            np.put_along_axis(dense, active, vals, axis=1)
            np.testing.assert_allclose(ev.values[k], dense[:, bm.conn[e]], atol=1e-12)
            dgrad = np.zeros((len(zs), patch.n_basis, patch.dim))
            for d in range(patch.dim):
                tmp = np.zeros((len(zs), patch.n_basis))
                np.put_along_axis(tmp, active, grads[..., d], axis=1)
                dgrad[..., d] = tmp
            np.testing.assert_allclose(ev.param_grads[k], dgrad[:, bm.conn[e]], atol=1e-9)

    @pytest.mark.parametrize("degrees", [(2, 2), (1, 3), (2, 1, 2)])
    def test_values_on_element_edges(self, degrees):
        patch = wavy(degrees, seed=1)
        bm = extract_patch(patch)
        z1 = np.array([0.0, 0.5, 1.0])
        zs = np.stack(np.meshgrid(*[z1] * patch.dim, indexing="ij"), -1).reshape(-1, patch.dim)
        ev = eval_elements(bm, zs)
        for k, e in enumerate(ev.elements):
            active, vals, _ = basis_many(patch, local_to_param(bm, e, zs))
            dense = np.zeros((len(zs), patch.n_basis))
            np.put_along_axis(dense, active, vals, axis=1)
            np.testing.assert_allclose(ev.values[k], dense[:, bm.conn[e]], atol=1e-12)

    def test_bezier_net_geometry(self, demo, rng):
        bm = extract_patch(demo)
        for e in range(bm.n_elements):
            zs = rng.random((42, 2))
            np.testing.assert_allclose(eval_bezier_geometry(bm, e, zs),
                                       patch_points(demo, local_to_param(bm, e, zs)), atol=1e-12)

    def test_tiling(self):
        patch = wavy((2, 1, 2))
        bm = extract_patch(patch)
        vol = np.prod(bm.boxes[:, :, 1] - bm.boxes[:, :, 0], axis=1).sum()
        assert vol == pytest.approx(1.0, abs=1e-12)

    def test_operator_columns(self, demo):
        np.testing.assert_allclose(extract_patch(demo).operators.sum(axis=1), 1.0, atol=1e-12)

    def test_bernstein_tensor_partition(self, rng):
        v, g = bernstein_tensor((2, 3, 1), rng.random((10, 3)))
        np.testing.assert_allclose(v.sum(axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(g.sum(axis=1), 0.0, atol=1e-12)


class TestTopoMesh:
    def test_demo(self, demo):
        topo = build_topo_mesh(extract_patch(demo))
        assert topo.n_vertices == 20
        assert topo.n_cells == 12
        np.testing.assert_allclose(topo.vertices, patch_points(demo, topo.corner_params),
                                   atol=1e-12)
        assert sorted(topo.vertex_sets) == ["xi00", "xi01", "xi10", "xi11"]

    def test_side_sets(self, demo):
        topo = build_topo_mesh(extract_patch(demo))
        side = np.union1d(topo.vertex_sets["xi10"], topo.vertex_sets["xi11"])
        expected = np.nonzero(np.isin(topo.corner_params[:, 1], [0.0, 1.0]))[0]
        np.testing.assert_array_equal(side, expected)
        np.testing.assert_allclose(topo.vertices[topo.vertex_sets["xi10"], 0], 0.4)

    def test_boundary_vertices_partitioned(self):
        topo = build_topo_mesh(extract_patch(quarter_annulus()))
        for d in range(2):
            lo, hi = topo.vertex_sets[f"xi{d}0"], topo.vertex_sets[f"xi{d}1"]
            assert len(np.intersect1d(lo, hi)) == 0

    def test_cells_positively_oriented(self, demo):
        topo = build_topo_mesh(extract_patch(demo))
        v = topo.vertices[topo.cells]
        # shoelace area of each VTK-ordered quad
        x, y = v[..., 0], v[..., 1]
        area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
        assert np.all(area > 0) or np.all(area < 0)

    def test_3d(self, demo3d):
        topo = build_topo_mesh(extract_patch(demo3d))
        assert topo.n_vertices == 40
        assert topo.cell_type == 12
        assert len(topo.vertex_sets) == 6
