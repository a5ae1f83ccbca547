"""Adaptive quadrature on the probability scale.

Integrals of the form ``int_lo^hi g(Q(p)) dp`` appear everywhere in this
package (distances, moments, tail variances).  When the quantile function is
unbounded at an endpoint the integrand is singular there, so those pieces
are mapped to a half line with ``p = c*exp(-u)`` (left) or
``1 - p = c*exp(-u)`` (right) and integrated chunk by chunk.
"""
import math
import warnings

import numpy as np
from scipy import integrate

EPSREL = 1e-11
TAIL_RTOL = 1e-10
_MAX_CHUNKS = 90


class QuadratureDivergence(ArithmeticError):
    """A half-line integral kept growing past the chunk budget."""


def quad(f, a, b, epsrel=EPSREL, epsabs=0.0, points=None):
    """``scipy.integrate.quad`` with integration warnings silenced.

    Returns
    -------
    (value, abserr)
    """
    if a == b:
        return 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsrel=epsrel, epsabs=epsabs, limit=200, points=points)
    return float(val), float(err)


def half_line(g, u0=0.0, rtol=TAIL_RTOL):
    """Integrate ``g`` over ``[u0, inf)`` in doubling chunks.

    Stops once a chunk contributes less than ``rtol`` times the running total;
    that last chunk is added to the error estimate as the remainder bound.
    """
    total = 0.0
    err = 0.0
    a = u0
    width = 1.0
    last = math.inf
    for k in range(_MAX_CHUNKS):
        v, e = quad(g, a, a + width)
        total += v
        err += e
        last = abs(v)
        if k >= 2 and last <= rtol * abs(total):
            return total, err + last
        if k >= 4 and total == 0.0 and v == 0.0:
            return 0.0, err
        a += width
        width *= 2.0
    raise QuadratureDivergence(f"integral over [{u0}, inf) did not settle (last chunk {last:g})")


def _mapped(g, inv, c, scale):
    def h(u):
        e = math.exp(-u)
        s = c * e
        if s == 0.0:
            return 0.0
        return g(inv(s)) * scale * e

    return h


def quantile_integral(model, g, lo=0.0, hi=1.0):
    """``int_lo^hi g(Q(p)) dp`` for a continuous model.

    Parameters
    ----------
    model : ContinuousModel
        Must expose ``quantile``, ``isf`` and ``support``.
    g : callable
        Scalar function of the quantile value.
    lo, hi : float
        Probability limits, ``0 <= lo <= hi <= 1``.

    Returns
    -------
    (value, abserr)
    """
    if hi <= lo:
        return 0.0, 0.0
    left_open = lo == 0.0 and not math.isfinite(model.support[0])
    right_open = hi == 1.0 and not math.isfinite(model.support[1])
    value = 0.0
    err = 0.0
    a, b = lo, hi
    if left_open:
        c = min(hi, 0.5)
        v, e = half_line(_mapped(g, model.quantile, c, c))
        value += v
        err += e
        a = c
    if right_open:
        c = min(1.0 - a, 0.5)
        v, e = half_line(_mapped(g, model.isf, c, c))
        value += v
        err += e
        b = 1.0 - c
    if b > a:
        v, e = quad(lambda p: g(model.quantile(p)), a, b)
        value += v
        err += e
    return value, err


def survival_expectation(model, g, t, side="right"):
    """``E[g(X) | X > t]`` (or ``X < t`` for ``side="left"``).

    The conditional law is parametrised by its own survival level
    ``s = Fbar(t) * exp(-u)``, so the integrand carries the weight
    ``exp(-u)`` on ``u >= 0`` and no explicit normalisation is needed.
    """
    if side == "right":
        s0 = float(model.sf(t))
        inv = model.isf
    else:
        s0 = float(model.cdf(t))
        inv = model.quantile
    if s0 <= 0.0:
        return 0.0, 0.0
    return half_line(_mapped(g, inv, s0, 1.0))
