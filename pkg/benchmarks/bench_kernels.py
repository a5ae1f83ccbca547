"""Time the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``.  Each kernel is timed on the
same inputs with both backends, and the outputs are checked to agree.
"""
import argparse
import timeit

import numpy as np

from mallowslab import _pykernels

try:
    from mallowslab import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def cases(rng):
    n = 4096
    xa = np.sort(rng.random(n))
    qa = np.arange(1, n + 1) / n
    xb = np.sort(rng.standard_normal(3 * n))
    qb = np.arange(1, 3 * n + 1) / (3 * n)
    a, b = np.sort(rng.random(1000)), np.sort(rng.random(10_000))
    u = np.sort(rng.random(n))
    grid = 4097
    paths = rng.standard_normal((256, grid))
    w = rng.random(grid)
    return {
        "merge_rpow (4096 vs 12288 atoms)": ("merge_rpow", (xa, qa, xb, qb, 2.0)),
        "ks_2samp (1000 vs 10000)": ("ks_2samp", (a, b)),
        "ecdf_sup_gap (4096)": ("ecdf_sup_gap", (u,)),
        **{
            f"trapz_abs_pow (256 x 4097, r={r:g})": ("trapz_abs_pow", (paths, w, r, 1.0 / (grid - 1)))
            for r in (2.0, 3.0, 2.5)
        },
    }


def best(fn, args, number):
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=5)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--number", type=int, default=20, help="calls per timing repeat")
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, (name, kargs) in cases(rng).items():
        py = getattr(_pykernels, name)
        t_py = best(py, kargs, args.number)
        if _ckernels is None:
            print(f"{label:36s} {t_py * 1e3:10.3f} {'n/a':>10s} {'n/a':>8s}")
            continue
        cy = getattr(_ckernels, name)
        np.testing.assert_allclose(np.asarray(cy(*kargs)), np.asarray(py(*kargs)), rtol=1e-10, atol=1e-12)
        t_cy = best(cy, kargs, args.number)
        print(f"{label:36s} {t_py * 1e3:10.3f} {t_cy * 1e3:10.3f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
