"""Time the numba and numpy variants of the hot kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Numba variants are called once before timing so that compilation is
excluded. Prints one line per kernel with the best time of each variant.
"""
import argparse
import timeit

import numpy as np

from igabez import kernels
from igabez._accel import HAVE_NUMBA


def cases(rng):
    knots = np.r_[np.zeros(3), np.linspace(0, 1, 50)[1:-1], np.ones(3)]
    xs = rng.uniform(0, 1, 20000)
    g2 = rng.normal(size=(2000, 9, 9, 2))
    g3 = rng.normal(size=(400, 27, 18, 3))
    w2 = rng.uniform(size=(2000, 9))
    w3 = rng.uniform(size=(400, 27))
    v2 = rng.uniform(size=(2000, 9, 9))
    return {
        "bspline_basis_batch (20k points, p=2)": ("bspline_basis_batch", (knots, 2, xs)),
        "laplace_local (2000 quads, 9 qp)": ("laplace_local", (g2, w2)),
        "mass_local (2000 quads, 9 qp)": ("mass_local", (v2, w2)),
        "source_local (2000 quads, 9 qp)": ("source_local", (v2, w2, -2.0)),
        "lin_elastic_local (400 hexes, 27 qp)": ("lin_elastic_local", (g3, w3, 1.0, 0.5)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy variants are timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speed-up':>9s}")
    for label, (name, call_args) in cases(rng).items():
        f_np = getattr(kernels, f"{name}_numpy")
        t_np = min(timeit.repeat(lambda: f_np(*call_args), number=1, repeat=args.repeat))
        if HAVE_NUMBA:
            f_nb = getattr(kernels, f"{name}_numba")
            f_nb(*call_args)
            t_nb = min(timeit.repeat(lambda: f_nb(*call_args), number=1, repeat=args.repeat))
            print(f"{label:40s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{label:40s} {1e3 * t_np:11.2f} {'-':>11s} {'-':>9s}")


if __name__ == "__main__":
    main()
