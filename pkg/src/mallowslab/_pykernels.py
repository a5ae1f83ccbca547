"""Pure numpy implementations of the hot loops.

These mirror ``_ckernels.pyx`` one to one and are used whenever the compiled
extension is unavailable (or ``MALLOWSLAB_PURE_PYTHON=1`` is set).
"""
import numpy as np


def merge_rpow(xa, qa, xb, qb, r):
    """Integral of ``|A^{-1}(p) - B^{-1}(p)|**r`` over ``(0, 1)`` for two step laws.

    Parameters
    ----------
    xa, xb : ndarray
        Strictly increasing atoms.
    qa, qb : ndarray
        Cumulative weights matching ``xa``/``xb``; the last entry must be 1.
    r : float
        Order of the distance.

    Returns
    -------
    float
        ``d_r**r``.
    """
    t = np.union1d(qa, qb)
    dt = np.diff(t, prepend=0.0)
    ia = np.searchsorted(qa, t, side="left")
    ib = np.searchsorted(qb, t, side="left")
    gap = np.abs(xa[ia] - xb[ib])
    if r == 1.0:
        return float(np.sum(dt * gap))
    if r == 2.0:
        return float(np.sum(dt * gap * gap))
    return float(np.sum(dt * gap**r))


def ks_2samp(a, b):
    """Two-sample Kolmogorov-Smirnov statistic of two sorted samples."""
    n1 = a.shape[0]
    n2 = b.shape[0]
    allv = np.concatenate([a, b])
    cdf1 = np.searchsorted(a, allv, side="right") / n1
    cdf2 = np.searchsorted(b, allv, side="right") / n2
    return float(np.max(np.abs(cdf1 - cdf2)))


def ecdf_sup_gap(u):
    """``sup_x |F_n(x) - F(x)|`` given the sorted values ``u_i = F(X_(i))``.

    Valid for continuous ``F``.
    """
    n = u.shape[0]
    i = np.arange(1, n + 1, dtype=float)
    upper = np.max(i / n - u)
    lower = np.max(u - (i - 1.0) / n)
    return float(max(upper, lower))


def trapz_abs_pow(paths, weight, r, dp):
    """Row-wise trapezoid rule for ``|B(p)|**r * weight(p)`` on a uniform grid.

    Parameters
    ----------
    paths : ndarray, shape (reps, m)
    weight : ndarray, shape (m,)
    r : float
    dp : float
        Grid spacing.
    """
    if r == 2.0:
        v = paths * paths * weight
    else:
        v = np.abs(paths) ** r * weight
    inner = v[:, 1:-1].sum(axis=1)
    return dp * (inner + 0.5 * (v[:, 0] + v[:, -1]))
