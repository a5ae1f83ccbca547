# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops in ``_pykernels``.

Every function releases the GIL around its loop so replication-level thread
pools can run them concurrently.
"""
import numpy as np

from libc.math cimport fabs, pow


cdef inline double _rpow(double g, double r) nogil:
    if r == 1.0:
        return g
    if r == 2.0:
        return g * g
    cdef int k, e = <int>r
    cdef double acc
    if e == r and 2 < e <= 8:  # small integer orders: avoid libm pow
        acc = g
        for k in range(e - 1):
            acc = acc * g
        return acc
    return pow(g, r)


def merge_rpow(const double[::1] xa, const double[::1] qa,
               const double[::1] xb, const double[::1] qb, double r):
    """Integral of ``|A^{-1}(p) - B^{-1}(p)|**r`` for two step laws (two-pointer merge)."""
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t ma = xa.shape[0], mb = xb.shape[0]
    cdef double t, prev = 0.0, acc = 0.0, comp = 0.0, y, s, term
    with nogil:
        while i < ma and j < mb:
            t = qa[i] if qa[i] < qb[j] else qb[j]
            term = (t - prev) * _rpow(fabs(xa[i] - xb[j]), r)
            # compensated summation
            y = term - comp
            s = acc + y
            comp = (s - acc) - y
            acc = s
            prev = t
            if qa[i] == t:
                i += 1
            if qb[j] == t:
                j += 1
    return acc


def ks_2samp(const double[::1] a, const double[::1] b):
    """Two-sample Kolmogorov-Smirnov statistic of two sorted samples."""
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t n1 = a.shape[0], n2 = b.shape[0]
    cdef double v, d, best = 0.0
    with nogil:
        while i < n1 and j < n2:
            v = a[i] if a[i] <= b[j] else b[j]
            while i < n1 and a[i] == v:
                i += 1
            while j < n2 and b[j] == v:
                j += 1
            d = fabs(<double>i / n1 - <double>j / n2)
            if d > best:
                best = d
    return best


def ecdf_sup_gap(const double[::1] u):
    """``sup_x |F_n(x) - F(x)|`` given sorted ``u_i = F(X_(i))`` for continuous ``F``."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double d, best = 0.0
    with nogil:
        for i in range(n):
            d = <double>(i + 1) / n - u[i]
            if d > best:
                best = d
            d = u[i] - <double>i / n
            if d > best:
                best = d
    return best


def trapz_abs_pow(const double[:, ::1] paths, const double[::1] weight, double r, double dp):
    """Row-wise trapezoid rule for ``|B(p)|**r * weight(p)`` on a uniform grid."""
    cdef Py_ssize_t reps = paths.shape[0], m = paths.shape[1]
    cdef Py_ssize_t k, row
    out = np.empty(reps, dtype=np.float64)
    cdef double[::1] res = out
    cdef double acc
    with nogil:
        for row in range(reps):
            acc = 0.5 * (_rpow(fabs(paths[row, 0]), r) * weight[0]
                         + _rpow(fabs(paths[row, m - 1]), r) * weight[m - 1])
            for k in range(1, m - 1):
                acc = acc + _rpow(fabs(paths[row, k]), r) * weight[k]
            res[row] = dp * acc
    return out
