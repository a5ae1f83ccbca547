"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``MALLOWSLAB_PURE_PYTHON=1`` to force the numpy implementations.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("MALLOWSLAB_PURE_PYTHON") != "1":
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        _impl = _ckernels
        BACKEND = "cython"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def merge_rpow(xa, qa, xb, qb, r):
    return float(_impl.merge_rpow(_c(xa), _c(qa), _c(xb), _c(qb), float(r)))


def ks_2samp(a, b):
    return float(_impl.ks_2samp(_c(a), _c(b)))


def ecdf_sup_gap(u):
    return float(_impl.ecdf_sup_gap(_c(u)))


def trapz_abs_pow(paths, weight, r, dp):
    # numpy's vectorised power beats a scalar libm pow loop for non-integer r
    impl = _impl if float(r).is_integer() and r <= 8 else _pykernels
    return np.asarray(impl.trapz_abs_pow(_c(paths), _c(weight), float(r), float(dp)))
