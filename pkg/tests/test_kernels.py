import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igabez import kernels
from igabez._accel import HAVE_NUMBA

from conftest import cox_de_boor


def random_knots(rng, p):
    inner = np.round(rng.uniform(0, 1, int(rng.integers(0, 5))), 2)
    if len(inner) and rng.random() < 0.5:
        inner = np.r_[inner, np.repeat(inner[0], min(p, 2))]  # repeated interior knot
    return np.r_[np.zeros(p + 1), np.sort(inner), np.ones(p + 1)]


class TestBsplineKernels:
    @given(seed=st.integers(0, 10**6), p=st.integers(0, 4))
    def test_numba_matches_numpy(self, seed, p):
        rng = np.random.default_rng(seed)
        knots = random_knots(rng, p)
        xs = np.r_[rng.uniform(0, 1, 20), 0.0, 1.0, knots]
        a = kernels.bspline_basis_batch_numpy(knots, p, xs)
        b = kernels.bspline_basis_batch_numba(knots, p, xs)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], atol=1e-14)
        np.testing.assert_allclose(a[2], b[2], atol=1e-11)

    @pytest.mark.parametrize("impl", ["numpy", "numba"])
    def test_against_recursion(self, impl, rng):
        fn = getattr(kernels, f"bspline_basis_batch_{impl}")
        knots = np.array([0, 0, 0, 0.2, 0.5, 0.5, 0.8, 1, 1, 1.0])
        xs = np.r_[rng.uniform(0, 1, 30), 0.5, 1.0]
        spans, vals, _ = fn(knots, 2, xs)
        for m, x in enumerate(xs):
            for j in range(3):
                ref = cox_de_boor(knots, 2, spans[m] - 2 + j, x)
                assert vals[m, j] == pytest.approx(ref, abs=1e-14)

    def test_spans_half_open(self):
        knots = np.array([0, 0, 0.5, 1, 1.0])
        spans = kernels.find_spans_numpy(knots, 1, [0.0, 0.49, 0.5, 1.0])
        np.testing.assert_array_equal(spans, [1, 1, 2, 2])


def element_batch(rng, n_el=3, n_qp=4, n_loc=9, sd=2):
    return rng.normal(size=(n_el, n_qp, n_loc, sd)), rng.uniform(0.1, 1, (n_el, n_qp))


class TestElementKernels:
    @pytest.mark.parametrize("sd", [1, 2, 3])
    def test_laplace(self, rng, sd):
        g, w = element_batch(rng, sd=sd)
        np.testing.assert_allclose(kernels.laplace_local_numba(g, w),
                                   kernels.laplace_local_numpy(g, w), atol=1e-12)

    def test_mass_and_source(self, rng):
        v = rng.uniform(size=(2, 5, 6))
        w = rng.uniform(0.1, 1, (2, 5))
        np.testing.assert_allclose(kernels.mass_local_numba(v, w), kernels.mass_local_numpy(v, w),
                                   atol=1e-12)
        np.testing.assert_allclose(kernels.source_local_numba(v, w, -2.0),
                                   kernels.source_local_numpy(v, w, -2.0), atol=1e-12)

    @pytest.mark.parametrize("sd", [2, 3])
    def test_elastic_index_vs_voigt(self, rng, sd):
        g, w = element_batch(rng, n_loc=8, sd=sd)
        a = kernels.lin_elastic_local_numba(g, w, 1.7, 0.6)
        b = kernels.lin_elastic_local_numpy(g, w, 1.7, 0.6)
        np.testing.assert_allclose(a, b, atol=1e-11)

    def test_voigt_matrix_2d(self):
        np.testing.assert_array_equal(kernels.voigt_stiffness(1.0, 2.0, 2),
                                      [[5, 1, 0], [1, 5, 0], [0, 0, 2]])

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            kernels.voigt_stiffness(1.0, 1.0, 1)


def _backend_of_subprocess(flag):
    env = dict(os.environ)
    env.pop("IGABEZ_DISABLE_NUMBA", None)
    if flag is not None:
        env["IGABEZ_DISABLE_NUMBA"] = flag
    out = subprocess.run([sys.executable, "-c", "import igabez; print(igabez.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


class TestBackendFlag:
    @pytest.mark.parametrize("flag", ["1", "true", "ON"])
    def test_disable(self, flag):
        assert _backend_of_subprocess(flag) == "numpy"

    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
    @pytest.mark.parametrize("flag", [None, "0", ""])
    def test_default(self, flag):
        assert _backend_of_subprocess(flag) == "numba"

    def test_numpy_backend_solves_demo(self, data_dir):
        env = dict(os.environ, IGABEZ_DISABLE_NUMBA="1")
        code = ("from igabez.io.problem import read_problem_file; "
                "from igabez.problem import build_problem; "
                f"s = build_problem(read_problem_file({str(data_dir / 'laplace.yaml')!r})).solve(); "
                "print(s.n_dofs, repr(float(s.report.x.sum())))")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        from igabez.io.problem import read_problem_file
        from igabez.problem import build_problem
        here = build_problem(read_problem_file(data_dir / "laplace.yaml")).solve()
        assert int(out[0]) == 20
        assert float(out[1]) == pytest.approx(float(here.report.x.sum()), abs=1e-12)


def test_benchmark_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--repeat", "1"])
    out = capsys.readouterr().out
    assert "laplace_local" in out and "lin_elastic_local" in out
