"""Distribution models: continuous families, finite step laws, empirical laws.

Continuous families carry their own survival function and inverse survival
function so that far right tails are never computed as ``1 - F``.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import quad


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DivergentMomentError(ArithmeticError):
    """A requested absolute moment is infinite for the given law."""


class PreconditionError(RuntimeError):
    """A numeric procedure refuses to run because its hypotheses are not met."""


def _check_prob(p):
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    return arr


def _signed_pow(z, k):
    return np.sign(z) * np.abs(z) ** k


def _ndtr_diff(a, b):
    """``Phi(b) - Phi(a)`` without cancellation in the upper tail."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = a > 0.0
    return np.where(upper, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))


# ----------------------------------------------------------------------------
# continuous families
# ----------------------------------------------------------------------------


class ContinuousModel:
    """Base class for continuous laws.

    Subclasses provide vectorised ``cdf``, ``sf``, ``pdf``, ``quantile`` and
    ``isf`` plus ``mean``, ``variance``, the support endpoints and the range of
    finite absolute moments.  The optional hooks ``cell_moments`` and
    ``cell_rpow`` supply closed forms used by the distance code.
    """

    family = "continuous"
    #: absolute moments E|X|^r are finite for r < max_moment
    max_moment = math.inf

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def moment_finite(self, r: float) -> bool:
        return r < self.max_moment

    def abs_moment_closed(self, r: float) -> float | None:
        return None

    def central_moment4(self) -> float | None:
        return None

    def cell_moments(self, edges):
        """Per-cell mean of the quantile function and squared deviation mass.

        For probability cells ``[t_{i-1}, t_i]`` returns ``mean_i`` and
        ``dev_i = int_cell (Q(p) - mean_i)**2 dp``, or ``None`` when no closed
        form is available.
        """
        return None

    def cell_rpow(self, x, lo, hi, r):
        """Closed-form ``int_lo^hi |x - Q(p)|**r dp`` per cell, or ``None``."""
        return None

    @property
    def spec(self) -> str:
        args = ",".join(f"{k}={_fmt_num(v)}" for k, v in self._params().items())
        return f"{self.family}({args})"

    def _params(self) -> dict:
        return {}


def _fmt_num(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ",".join(_fmt_num(x) for x in v) + "]"
    v = float(v)
    return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


@dataclass(frozen=True)
class Uniform(ContinuousModel):
    a: float = 0.0
    b: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("uniform requires a < b")

    @property
    def support(self):
        return (float(self.a), float(self.b))

    def _params(self):
        return {"a": self.a, "b": self.b}

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def sf(self, x):
        return np.clip((self.b - np.asarray(x, dtype=float)) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def quantile(self, p):
        return self.a + (self.b - self.a) * np.asarray(p, dtype=float)

    def isf(self, s):
        return self.b - (self.b - self.a) * np.asarray(s, dtype=float)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def abs_moment_closed(self, r):
        return float((_signed_pow(self.b, r + 1) - _signed_pow(self.a, r + 1)) / ((r + 1) * (self.b - self.a)))

    def central_moment4(self):
        return (self.b - self.a) ** 4 / 80.0

    def cell_moments(self, edges):
        lo, hi = edges[:-1], edges[1:]
        w = self.b - self.a
        mean = self.a + w * 0.5 * (lo + hi)
        return mean, w * w * (hi - lo) ** 3 / 12.0

    def cell_rpow(self, x, lo, hi, r):
        # Q is linear, so the integral is a difference of |.|^(r+1) terms
        w = self.b - self.a
        z1 = self.quantile(hi) - x
        z0 = self.quantile(lo) - x
        return (_signed_pow(z1, r + 1) - _signed_pow(z0, r + 1)) / ((r + 1) * w)


@dataclass(frozen=True)
class Normal(ContinuousModel):
    mu: float = 0.0
    sigma: float = 1.0
    family = "normal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("normal requires sigma > 0")

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _params(self):
        return {"mu": self.mu, "sigma": self.sigma}

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def cdf(self, x):
        return special.ndtr(self._z(x))

    def sf(self, x):
        return special.ndtr(-self._z(x))

    def pdf(self, x):
        z = self._z(x)
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def quantile(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def isf(self, s):
        return self.mu - self.sigma * special.ndtri(s)

    @property
    def mean(self):
        return float(self.mu)

    @property
    def variance(self):
        return float(self.sigma) ** 2

    def abs_moment_closed(self, r):
        k = -0.5 * (self.mu / self.sigma) ** 2
        return float(
            self.sigma**r * 2 ** (r / 2) * special.gamma((r + 1) / 2) / math.sqrt(math.pi) * special.hyp1f1(-r / 2, 0.5, k)
        )

    def central_moment4(self):
        return 3.0 * self.sigma**4

    def cell_moments(self, edges):
        z = special.ndtri(edges)
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        with np.errstate(invalid="ignore"):
            zphi = np.where(np.isfinite(z), z * phi, 0.0)
        dp = np.diff(edges)
        m1 = phi[:-1] - phi[1:]
        m2 = dp + zphi[:-1] - zphi[1:]
        mz = m1 / dp
        dev = np.maximum(m2 - m1 * mz, 0.0)
        return self.mu + self.sigma * mz, self.sigma**2 * dev


@dataclass(frozen=True)
class Exponential(ContinuousModel):
    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("exponential requires rate > 0")

    @property
    def support(self):
        return (0.0, math.inf)

    def _params(self):
        return {"rate": self.rate}

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, np.exp(-self.rate * np.maximum(x, 0.0)), 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, p):
        return -np.log1p(-np.asarray(p, dtype=float)) / self.rate

    def isf(self, s):
        return -np.log(s) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def variance(self):
        return 1.0 / self.rate**2

    def abs_moment_closed(self, r):
        return float(special.gamma(r + 1) / self.rate**r)

    def central_moment4(self):
        return 9.0 / self.rate**4

    def cell_moments(self, edges):
        u = 1.0 - np.asarray(edges, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lu = np.where(u > 0, np.log(u), 0.0)
        g1 = u - u * lu
        g2 = u * lu * lu - 2.0 * u * lu + 2.0 * u
        dp = np.diff(edges)
        m1 = g1[:-1] - g1[1:]
        m2 = g2[:-1] - g2[1:]
        mean = m1 / dp
        dev = np.maximum(m2 - m1 * mean, 0.0)
        return mean / self.rate, dev / self.rate**2


@dataclass(frozen=True)
class Lognormal(ContinuousModel):
    mu: float = 0.0
    sigma: float = 1.0
    family = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("lognormal requires sigma > 0")

    @property
    def support(self):
        return (0.0, math.inf)

    def _params(self):
        return {"mu": self.mu, "sigma": self.sigma}

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, (np.log(np.maximum(x, 1e-320)) - self.mu) / self.sigma, -np.inf)

    def cdf(self, x):
        return special.ndtr(self._z(x))

    def sf(self, x):
        return special.ndtr(-self._z(x))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = self._z(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.exp(-0.5 * z * z) / (self.sigma * np.where(x > 0, x, 1.0) * math.sqrt(2.0 * math.pi))
        return np.where(x > 0, d, 0.0)

    def quantile(self, p):
        return np.exp(self.mu + self.sigma * special.ndtri(p))

    def isf(self, s):
        return np.exp(self.mu - self.sigma * special.ndtri(s))

    @property
    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)

    @property
    def variance(self):
        s2 = self.sigma**2
        return math.expm1(s2) * math.exp(2 * self.mu + s2)

    def abs_moment_closed(self, r):
        return math.exp(r * self.mu + 0.5 * (r * self.sigma) ** 2)

    def central_moment4(self):
        m = [self.abs_moment_closed(k) for k in range(5)]
        mu = m[1]
        return m[4] - 4 * mu * m[3] + 6 * mu**2 * m[2] - 3 * mu**4

    def cell_moments(self, edges):
        z = special.ndtri(edges)
        s = self.sigma
        dp = np.diff(edges)
        m1 = math.exp(self.mu + 0.5 * s * s) * _ndtr_diff(z[:-1] - s, z[1:] - s)
        m2 = math.exp(2 * self.mu + 2 * s * s) * _ndtr_diff(z[:-1] - 2 * s, z[1:] - 2 * s)
        mean = m1 / dp
        return mean, np.maximum(m2 - m1 * mean, 0.0)


@dataclass(frozen=True)
class Weibull(ContinuousModel):
    k: float = 1.0
    scale: float = 1.0
    family = "weibull"

    def __post_init__(self):
        if not (self.k > 0 and self.scale > 0):
            raise DomainError("weibull requires k > 0 and scale > 0")

    @property
    def support(self):
        return (0.0, math.inf)

    def _params(self):
        return {"k": self.k, "scale": self.scale}

    def _y(self, x):
        x = np.asarray(x, dtype=float)
        return (np.maximum(x, 0.0) / self.scale) ** self.k

    def cdf(self, x):
        return -np.expm1(-self._y(x))

    def sf(self, x):
        return np.exp(-self._y(x))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        y = self._y(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.k / self.scale * (np.maximum(x, 0.0) / self.scale) ** (self.k - 1) * np.exp(-y)
        return np.where(x >= 0, d, 0.0)

    def quantile(self, p):
        return self.scale * (-np.log1p(-np.asarray(p, dtype=float))) ** (1.0 / self.k)

    def isf(self, s):
        return self.scale * (-np.log(s)) ** (1.0 / self.k)

    @property
    def mean(self):
        return self.scale * math.gamma(1 + 1 / self.k)

    @property
    def variance(self):
        g1 = math.gamma(1 + 1 / self.k)
        return self.scale**2 * (math.gamma(1 + 2 / self.k) - g1 * g1)

    def abs_moment_closed(self, r):
        return self.scale**r * math.gamma(1 + r / self.k)

    def central_moment4(self):
        m = [self.abs_moment_closed(j) for j in range(5)]
        mu = m[1]
        return m[4] - 4 * mu * m[3] + 6 * mu**2 * m[2] - 3 * mu**4

    def cell_moments(self, edges):
        # with v = -log(1 - p): int Q^j dp = scale^j * int v^(j/k) e^-v dv
        with np.errstate(divide="ignore"):
            v = -np.log1p(-np.asarray(edges, dtype=float))
        dp = np.diff(edges)
        out = []
        for j in (1, 2):
            a = 1.0 + j / self.k
            upper = special.gammaincc(a, v)  # 0 at v = inf
            out.append(math.gamma(a) * (upper[:-1] - upper[1:]) * self.scale**j)
        m1, m2 = out
        mean = m1 / dp
        return mean, np.maximum(m2 - m1 * mean, 0.0)


@dataclass(frozen=True)
class Pareto(ContinuousModel):
    alpha: float = 3.0
    xm: float = 1.0
    family = "pareto"

    def __post_init__(self):
        if not (self.alpha > 0 and self.xm > 0):
            raise DomainError("pareto requires alpha > 0 and xm > 0")

    @property
    def support(self):
        return (float(self.xm), math.inf)

    @property
    def max_moment(self):
        return float(self.alpha)

    def _params(self):
        return {"alpha": self.alpha, "xm": self.xm}

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > self.xm, -np.expm1(self.alpha * np.log(self.xm / np.maximum(x, self.xm))), 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > self.xm, (self.xm / np.maximum(x, self.xm)) ** self.alpha, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, self.xm)
        return np.where(x >= self.xm, self.alpha * self.xm**self.alpha / xs ** (self.alpha + 1), 0.0)

    def quantile(self, p):
        return self.xm * np.exp(-np.log1p(-np.asarray(p, dtype=float)) / self.alpha)

    def isf(self, s):
        return self.xm * np.asarray(s, dtype=float) ** (-1.0 / self.alpha)

    @property
    def mean(self):
        if self.alpha <= 1:
            raise DivergentMomentError("pareto mean is infinite for alpha <= 1")
        return self.alpha * self.xm / (self.alpha - 1)

    @property
    def variance(self):
        if self.alpha <= 2:
            raise DivergentMomentError("pareto variance is infinite for alpha <= 2")
        a = self.alpha
        return self.xm**2 * a / ((a - 1) ** 2 * (a - 2))

    def abs_moment_closed(self, r):
        return self.alpha * self.xm**r / (self.alpha - r)

    def central_moment4(self):
        if self.alpha <= 4:
            return None
        m = [self.abs_moment_closed(j) for j in range(5)]
        mu = m[1]
        return m[4] - 4 * mu * m[3] + 6 * mu**2 * m[2] - 3 * mu**4

    def cell_moments(self, edges):
        if self.alpha <= 2:
            return None
        u = 1.0 - np.asarray(edges, dtype=float)
        dp = np.diff(edges)
        out = []
        for j in (1, 2):
            e = 1.0 - j / self.alpha
            g = u**e / e * self.xm**j
            out.append(g[:-1] - g[1:])
        m1, m2 = out
        mean = m1 / dp
        return mean, np.maximum(m2 - m1 * mean, 0.0)


@dataclass(frozen=True)
class Affine(ContinuousModel):
    """``loc + scale * Y`` for a continuous base law ``Y`` and ``scale > 0``."""

    base: ContinuousModel
    loc: float = 0.0
    scale: float = 1.0
    family = "affine"

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("affine requires scale > 0")

    @property
    def spec(self):
        return f"affine(base={self.base.spec},loc={_fmt_num(self.loc)},scale={_fmt_num(self.scale)})"

    @property
    def support(self):
        lo, hi = self.base.support
        return (self.loc + self.scale * lo, self.loc + self.scale * hi)

    @property
    def max_moment(self):
        return self.base.max_moment

    def _y(self, x):
        return (np.asarray(x, dtype=float) - self.loc) / self.scale

    def cdf(self, x):
        return self.base.cdf(self._y(x))

    def sf(self, x):
        return self.base.sf(self._y(x))

    def pdf(self, x):
        return self.base.pdf(self._y(x)) / self.scale

    def quantile(self, p):
        return self.loc + self.scale * self.base.quantile(p)

    def isf(self, s):
        return self.loc + self.scale * self.base.isf(s)

    @property
    def mean(self):
        return self.loc + self.scale * self.base.mean

    @property
    def variance(self):
        return self.scale**2 * self.base.variance

    def central_moment4(self):
        m4 = self.base.central_moment4()
        return None if m4 is None else self.scale**4 * m4

    def cell_moments(self, edges):
        got = self.base.cell_moments(edges)
        if got is None:
            return None
        mean, dev = got
        return self.loc + self.scale * mean, self.scale**2 * dev

    def cell_rpow(self, x, lo, hi, r):
        got = self.base.cell_rpow((np.asarray(x, dtype=float) - self.loc) / self.scale, lo, hi, r)
        return None if got is None else self.scale**r * got


@dataclass(frozen=True, eq=False)
class UserModel(ContinuousModel):
    """A continuous law assembled from user-supplied callables.

    ``sf`` and ``isf`` default to ``1 - cdf`` and ``quantile(1 - s)``; supply
    them whenever the right tail matters.
    """

    cdf_fn: Callable
    pdf_fn: Callable
    quantile_fn: Callable
    mean_value: float
    variance_value: float
    moment_limit: float = math.inf
    lower: float = -math.inf
    upper: float = math.inf
    sf_fn: Callable | None = None
    isf_fn: Callable | None = None
    name: str = "user"
    family = "user"

    @property
    def spec(self):
        return f"user(name={self.name})"

    @property
    def support(self):
        return (self.lower, self.upper)

    @property
    def max_moment(self):
        return self.moment_limit

    def cdf(self, x):
        return self.cdf_fn(x)

    def sf(self, x):
        if self.sf_fn is not None:
            return self.sf_fn(x)
        return 1.0 - self.cdf_fn(x)

    def pdf(self, x):
        return self.pdf_fn(x)

    def quantile(self, p):
        return self.quantile_fn(p)

    def isf(self, s):
        if self.isf_fn is not None:
            return self.isf_fn(s)
        return self.quantile_fn(1.0 - np.asarray(s, dtype=float))

    @property
    def mean(self):
        return self.mean_value

    @property
    def variance(self):
        return self.variance_value


# ----------------------------------------------------------------------------
# step laws
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepDistribution:
    """Finitely supported law with atoms ``x``, masses ``p`` and cumulative weights ``q``."""

    atoms: np.ndarray
    masses: np.ndarray
    cum: np.ndarray = field(repr=False)
    family = "step"

    def __init__(self, atoms, masses, cum=None):
        x = np.array(atoms, dtype=float).reshape(-1)
        p = np.array(masses, dtype=float).reshape(-1)
        if x.size == 0 or x.shape != p.shape:
            raise DomainError("step law needs matching, nonempty atoms and masses")
        if np.any(np.diff(x) <= 0):
            raise DomainError("step atoms must be strictly increasing")
        if np.any(p <= 0):
            raise DomainError("step masses must be positive")
        q = np.cumsum(p) if cum is None else np.array(cum, dtype=float)
        if abs(q[-1] - 1.0) > 1e-12:
            raise DomainError(f"step masses must sum to 1 (got {q[-1]!r})")
        q[-1] = 1.0
        for a in (x, p, q):
            a.setflags(write=False)
        object.__setattr__(self, "atoms", x)
        object.__setattr__(self, "masses", p)
        object.__setattr__(self, "cum", q)

    @classmethod
    def from_counts(cls, atoms, counts):
        counts = np.asarray(counts, dtype=np.int64)
        n = int(counts.sum())
        c = np.cumsum(counts)
        return cls(atoms, counts / n, cum=c / n)

    @classmethod
    def point(cls, c):
        return cls([c], [1.0])

    @property
    def m(self):
        return self.atoms.size

    @property
    def support(self):
        return (float(self.atoms[0]), float(self.atoms[-1]))

    @property
    def spec(self):
        return f"step(x={_fmt_num(self.atoms)},p={_fmt_num(self.masses)})"

    def moment_finite(self, r):
        return True

    def cdf(self, x):
        idx = np.searchsorted(self.atoms, x, side="right")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, p):
        idx = np.searchsorted(self.cum, p, side="left")
        return self.atoms[np.minimum(idx, self.m - 1)]

    @property
    def mean(self):
        return float(np.dot(self.masses, self.atoms))

    @property
    def variance(self):
        return float(np.dot(self.masses, (self.atoms - self.mean) ** 2))

    def abs_moment_closed(self, r):
        return float(np.dot(self.masses, np.abs(self.atoms) ** r))

    def central_moment4(self):
        return float(np.dot(self.masses, (self.atoms - self.mean) ** 4))

    def affine(self, a, b):
        """Law of ``a*X + b``."""
        if a == 0:
            return StepDistribution.point(b)
        x = a * self.atoms + b
        if a > 0:
            return StepDistribution(x, self.masses)
        return StepDistribution(x[::-1], self.masses[::-1])


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """A sorted sample viewed as the law putting mass ``1/n`` on each point."""

    values: np.ndarray
    family = "empirical"

    def __init__(self, values, presorted=False):
        v = np.array(values, dtype=float).reshape(-1)
        if v.size == 0:
            raise DomainError("empirical law needs at least one value")
        if not presorted:
            v.sort()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    @property
    def mean(self):
        return float(np.mean(self.values))

    @property
    def support(self):
        return (float(self.values[0]), float(self.values[-1]))

    def moment_finite(self, r):
        return True

    def cdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n

    def quantile(self, p):
        # X_(ceil(n p)) via the cumulative weights i/n
        cum = np.arange(1, self.n + 1) / self.n
        idx = np.searchsorted(cum, p, side="left")
        return self.values[np.minimum(idx, self.n - 1)]

    def to_step(self):
        x, counts = np.unique(self.values, return_counts=True)
        return StepDistribution.from_counts(x, counts)

    def abs_moment_closed(self, r):
        return float(np.mean(np.abs(self.values) ** r))

    def shifted(self, c):
        return EmpiricalDistribution(self.values + c, presorted=True)


# ----------------------------------------------------------------------------
# module-level operations
# ----------------------------------------------------------------------------


def quantile(model, p):
    """Generalised inverse ``inf{x : F(x) >= p}`` for ``p`` in ``(0, 1)``."""
    arr = _check_prob(p)
    out = model.quantile(arr)
    return float(out) if np.ndim(out) == 0 else out


def abs_moment(model, r, method="auto"):
    """``E|X|**r``.

    Parameters
    ----------
    method : {"auto", "closed", "quadrature"}
        ``auto`` prefers the closed form and falls back to quadrature on the
        quantile scale.

    Raises
    ------
    DivergentMomentError
        If the moment is infinite for this law.
    """
    if r < 1:
        raise DomainError("moment order must be >= 1")
    if not model.moment_finite(r):
        raise DivergentMomentError(f"E|X|^{r} is infinite for {model.spec}")
    if method in ("auto", "closed"):
        val = model.abs_moment_closed(r)
        if val is not None:
            return float(val)
        if method == "closed":
            raise NotImplementedError(f"no closed-form moment for {model.spec}")
    if isinstance(model, (StepDistribution, EmpiricalDistribution)):
        return float(model.abs_moment_closed(r))
    val, _ = quad.quantile_integral(model, lambda q: abs(float(q)) ** r)
    return val


def sample(model, n, rng):
    """``n`` iid draws by inverse-transform sampling, returned sorted."""
    if n < 1:
        raise DomainError("sample size must be >= 1")
    if isinstance(model, EmpiricalDistribution):
        return EmpiricalDistribution(model.values[rng.integers(0, model.n, n)])
    u = rng.random(n)
    u[u == 0.0] = 2.0**-54
    return EmpiricalDistribution(model.quantile(u))


# ----------------------------------------------------------------------------
# spec grammar: family(param=value,...)
# ----------------------------------------------------------------------------


def _bernoulli(p=0.5):
    p = float(p)
    if p <= 0 or p >= 1:
        raise DomainError("bernoulli needs 0 < p < 1")
    return StepDistribution([0.0, 1.0], [1.0 - p, p])


def _step(x, p):
    return StepDistribution(x, p)


def _point(x=0.0):
    return StepDistribution.point(float(x))


FAMILIES: dict[str, Callable] = {
    "uniform": Uniform,
    "normal": Normal,
    "exponential": Exponential,
    "lognormal": Lognormal,
    "weibull": Weibull,
    "pareto": Pareto,
    "step": _step,
    "bernoulli": _bernoulli,
    "point": _point,
}


def register_family(name, factory):
    """Make ``name(...)`` available in model specifications."""
    FAMILIES[name] = factory


_SPEC = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$", re.S)


def _split_args(body):
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return parts


def parse_model(text):
    """Build a model from ``family(param=value,...)``.

    >>> parse_model("normal(mu=0,sigma=2)").variance
    4.0
    """
    m = _SPEC.match(text)
    if not m:
        raise DomainError(f"cannot parse model specification {text!r}")
    name, body = m.group(1).lower(), m.group(2) or ""
    if name not in FAMILIES:
        raise DomainError(f"unknown family {name!r}; known: {', '.join(sorted(FAMILIES))}")
    kwargs = {}
    for part in _split_args(body):
        if "=" not in part:
            raise DomainError(f"expected key=value in {text!r}, got {part!r}")
        key, val = part.split("=", 1)
        try:
            kwargs[key.strip()] = ast.literal_eval(val.strip())
        except (ValueError, SyntaxError) as exc:
            raise DomainError(f"bad value for {key.strip()!r} in {text!r}") from exc
    try:
        return FAMILIES[name](**kwargs)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from exc


def read_sample_file(path):
    """One numeric value per line; blank lines and ``#`` comments are skipped."""
    vals = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                vals.append(float(line))
    return EmpiricalDistribution(vals)
