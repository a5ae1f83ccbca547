import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mallowslab import _pykernels, kernels

try:
    from mallowslab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_switch():
    env = dict(os.environ, MALLOWSLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import mallowslab; print(mallowslab.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def _step(xs, ws):
    x = np.array(sorted(set(xs)), dtype=float)
    w = np.array(ws[: x.size], dtype=float)
    return x, np.cumsum(w) / w.sum()


finite = st.floats(-1e3, 1e3, allow_nan=False)


@needs_ext
@given(
    st.lists(finite, min_size=1, max_size=30),
    st.lists(st.integers(1, 50), min_size=30, max_size=30),
    st.lists(finite, min_size=1, max_size=30),
    st.lists(st.integers(1, 50), min_size=30, max_size=30),
    st.sampled_from([1.0, 1.5, 2.0, 3.0]),
)
@settings(max_examples=200)
def test_merge_rpow_backends_agree(xa, wa, xb, wb, r):
    a, qa = _step(xa, wa)
    b, qb = _step(xb, wb)
    qa[-1] = qb[-1] = 1.0
    c = _ckernels.merge_rpow(a, qa, b, qb, r)
    p = _pykernels.merge_rpow(a, qa, b, qb, r)
    assert c == pytest.approx(p, rel=1e-11, abs=1e-300)


@pytest.mark.parametrize("impl", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_ks_matches_scipy(impl, rng):
    for _ in range(20):
        a = np.sort(rng.normal(size=int(rng.integers(1, 300))))
        b = np.sort(rng.normal(0.2, size=int(rng.integers(1, 300))))
        assert impl.ks_2samp(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)


@pytest.mark.parametrize("impl", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_ks_with_ties(impl):
    a = np.array([0.0, 0.0, 1.0, 1.0])
    b = np.array([0.0, 1.0, 1.0, 1.0])
    assert impl.ks_2samp(a, b) == pytest.approx(0.25)
    assert impl.ks_2samp(np.array([0.0]), np.array([1.0])) == 1.0


@pytest.mark.parametrize("impl", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_ecdf_sup_gap_matches_scipy(impl, rng):
    u = np.sort(rng.random(500))
    assert impl.ecdf_sup_gap(u) == pytest.approx(stats.kstest(u, "uniform").statistic, abs=1e-15)


@needs_ext
def test_trapz_backends_agree(rng):
    paths = rng.normal(size=(17, 101))
    w = rng.random(101)
    for r in (1.0, 2.0, 2.7):
        np.testing.assert_allclose(
            _ckernels.trapz_abs_pow(paths, w, r, 0.01), _pykernels.trapz_abs_pow(paths, w, r, 0.01), rtol=1e-12
        )


def test_trapz_against_numpy(rng):
    paths = rng.normal(size=(5, 33))
    w = rng.random(33)
    got = kernels.trapz_abs_pow(paths, w, 2.0, 1 / 32)
    want = np.trapezoid(np.abs(paths) ** 2 * w, dx=1 / 32, axis=1)
    np.testing.assert_allclose(got, want, rtol=1e-13)
