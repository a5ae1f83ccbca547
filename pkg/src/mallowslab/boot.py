"""Bootstrap of the normalised sample mean.

The root is ``T_n = n^{1/2} (Xbar_n - mu)``.  Its sampling law under the
model, ``H_n(F)``, and under resampling from the data, ``H_n(Fhat_n)``, are
both represented by Monte Carlo draws; for ``n <= 7`` the bootstrap law can
also be enumerated exactly.  Every inequality that compares them carries an
explicit Monte Carlo error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import gammaln

from .dist import (
    Affine,
    ContinuousModel,
    DivergentMomentError,
    DomainError,
    EmpiricalDistribution,
    PreconditionError,
    StepDistribution,
)
from .mallows import distance_emp_cont, distance_step_step

EXACT_MAX_N = 7
_BLOCK_ELEMS = 1 << 22


@dataclass(frozen=True, eq=False)
class RootDistribution:
    """Law of ``n^{1/2}(Xbar - mu)`` (``root="true"``) or of its bootstrap copy.

    Monte Carlo representations keep their draws in generation order so the
    error estimate can split them into independent halves.
    """

    law: EmpiricalDistribution | StepDistribution
    root: str  # "true" | "bootstrap"
    n: int
    size: int  # MC draws, or number of enumerated resamples
    exact: bool
    draws: np.ndarray | None = None

    @classmethod
    def from_draws(cls, draws, root, n):
        draws = np.asarray(draws, dtype=float)
        draws.setflags(write=False)
        return cls(EmpiricalDistribution(draws), root, int(n), int(draws.size), False, draws)

    @property
    def mean(self):
        return self.law.mean

    def mc_noise(self):
        """Estimated ``d_2`` from this representation to the law it stands for.

        The distance between the even and odd draws is about twice that of
        the full representation from its target (each half has half the
        draws, and the two errors add in quadrature).
        """
        if self.exact:
            return 0.0
        d = self.draws
        if d is None or d.size < 4:
            return math.inf
        return 0.5 * distance_step_step(EmpiricalDistribution(d[0::2]), EmpiricalDistribution(d[1::2]), 2).value


def _row_means(draw_block, n, reps, rng):
    """Means of ``reps`` rows of ``n`` values, produced block by block."""
    out = np.empty(reps)
    rows = max(1, _BLOCK_ELEMS // max(n, 1))
    done = 0
    while done < reps:
        k = min(rows, reps - done)
        out[done:done + k] = draw_block(k, rng).mean(axis=1)
        done += k
    return out


def resample(sample, rng):
    """``n`` draws with replacement from the sample."""
    if sample.n < 1:
        raise DomainError("empty sample")
    return EmpiricalDistribution(sample.values[rng.integers(0, sample.n, sample.n)])


def _draw_model(F, n):
    def draw(k, rng):
        u = rng.random((k, n))
        u[u == 0.0] = 2.0**-54
        return F.quantile(u)

    return draw


def _check_variance(F):
    if isinstance(F, ContinuousModel) and not F.moment_finite(2):
        raise DivergentMomentError(f"{F.spec} has infinite variance; the root has no limit law")


def true_root_distribution(F, n, reps, rng):
    """``reps`` draws of ``n^{1/2}(Xbar_n - mu)`` under ``F``."""
    if n < 1 or reps < 1:
        raise DomainError("need n >= 1 and reps >= 1")
    _check_variance(F)
    mu = F.mean
    means = _row_means(_draw_model(F, n), n, reps, rng)
    return RootDistribution.from_draws(math.sqrt(n) * (means - mu), "true", n)


def _exact_bootstrap(sample):
    """Enumerate the ``n^n`` resamples as multisets with multinomial weights."""
    n = sample.n
    if n > EXACT_MAX_N:
        raise PreconditionError(f"exact enumeration needs n <= {EXACT_MAX_N} (got n={n}; n^n resamples)")
    x = sample.values - sample.mean  # centre first so the enumerated mean is 0 up to rounding
    combos = np.array(list(combinations_with_replacement(range(n), n)), dtype=np.intp)
    counts = np.zeros((combos.shape[0], n), dtype=np.int64)
    rows = np.repeat(np.arange(combos.shape[0]), n)
    np.add.at(counts, (rows, combos.ravel()), 1)
    logw = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) - n * math.log(n)
    w = np.exp(logw)
    roots = (counts @ x) / math.sqrt(n)
    order = np.argsort(roots, kind="stable")
    roots, w = roots[order], w[order]
    atoms, start = np.unique(roots, return_index=True)
    masses = np.add.reduceat(w, start)
    masses /= masses.sum()
    return StepDistribution(atoms, masses)


def bootstrap_root_distribution(sample, reps=None, rng=None, exact=False):
    """Law of ``n^{1/2}(Xbar* - Xbar)`` under resampling from ``sample``.

    Parameters
    ----------
    sample : EmpiricalDistribution
    reps : int
        Monte Carlo draws (ignored when ``exact``).
    rng : numpy.random.Generator
    exact : bool
        Enumerate all ``n^n`` resamples; only for ``n <= 7``.
    """
    n = sample.n
    if exact:
        law = _exact_bootstrap(sample)
        return RootDistribution(law, "bootstrap", n, n**n, True)
    if reps is None or reps < 1 or rng is None:
        raise DomainError("Monte Carlo mode needs reps >= 1 and an rng")
    xbar = sample.mean
    vals = sample.values
    means = _row_means(lambda k, g: vals[g.integers(0, n, (k, n))], n, reps, rng)
    return RootDistribution.from_draws(math.sqrt(n) * (means - xbar), "bootstrap", n)


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    mc_error: float


def root_gap(a, b):
    """``d_2`` between two root representations with a combined MC error."""
    gap = distance_step_step(a.law, b.law, 2).value
    return GapEstimate(gap, math.hypot(a.mc_noise(), b.mc_noise()))


def bootstrap_gap(sample, F, reps, rng, exact=False):
    """Estimate ``d_2(H_n(Fhat_n), H_n(F))`` with its Monte Carlo error."""
    true_root = true_root_distribution(F, sample.n, reps, rng)
    if exact:
        boot_root = bootstrap_root_distribution(sample, exact=True)
    else:
        boot_root = bootstrap_root_distribution(sample, reps, rng)
    return root_gap(true_root, boot_root)


def upper_bound(sample, F):
    """``d_2(Fhat_n, F)``, which dominates the bootstrap gap."""
    if isinstance(F, StepDistribution):
        return distance_step_step(sample, F, 2).value
    return distance_emp_cont(sample, F, 2).value


def _shifted_model(F, c):
    if isinstance(F, StepDistribution):
        return F.affine(1.0, c)
    return Affine(F, loc=c, scale=1.0)


@dataclass(frozen=True)
class ShiftIdentity:
    lhs_sq: float
    rhs_sq: float
    satisfied: bool

    def to_dict(self):
        return {"lhs_sq": self.lhs_sq, "rhs_sq": self.rhs_sq, "satisfied": self.satisfied}


def shift_identity_check(sample, F, atol=1e-8):
    """``d_2(Fhat - Xbar, F - mu)^2 = d_2(Fhat, F)^2 - (Xbar - mu)^2``."""
    xbar, mu = sample.mean, F.mean
    centred = sample.shifted(-xbar)
    G = _shifted_model(F, -mu)
    if isinstance(G, StepDistribution):
        lhs = distance_step_step(centred, G, 2).value_pow
        full = distance_step_step(sample, F, 2).value_pow
    else:
        lhs = distance_emp_cont(centred, G, 2).value_pow
        full = distance_emp_cont(sample, F, 2).value_pow
    rhs = full - (xbar - mu) ** 2
    return ShiftIdentity(float(lhs), float(rhs), bool(abs(lhs - rhs) <= atol))


def sample_sd(sample):
    """Standard deviation with the ``1/n`` convention."""
    v = sample.values
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def lower_bound(sample, F):
    """``|s - sigma|``, a lower bound for the bootstrap gap."""
    return abs(sample_sd(sample) - math.sqrt(F.variance))


@dataclass(frozen=True)
class SigmaCLT:
    mean: float
    variance: float
    asymptotic_variance: float
    n: int
    reps: int

    def to_dict(self):
        return dict(self.__dict__)


def sigma_clt_statistics(F, n, reps, rng):
    """Monte Carlo mean and variance of ``n^{1/2}(s - sigma)``.

    The limit is ``N(0, (mu_4 - sigma^4) / (4 sigma^2))`` with ``mu_4`` the
    central fourth moment.
    """
    if isinstance(F, ContinuousModel) and not F.moment_finite(4):
        raise DivergentMomentError(
            f"{F.spec} has infinite fourth moment; n^1/2 (s - sigma) has no normal limit "
            "(see heavy_tail_trajectory for the divergent-moment behaviour)"
        )
    sigma2 = F.variance
    if not sigma2 > 0:
        raise PreconditionError("sigma_clt_statistics needs a nondegenerate law")
    sigma = math.sqrt(sigma2)
    m4 = F.central_moment4()
    draw = _draw_model(F, n)
    stats = np.empty(reps)
    rows = max(1, _BLOCK_ELEMS // n)
    done = 0
    while done < reps:
        k = min(rows, reps - done)
        x = draw(k, rng)
        s = np.sqrt(np.mean((x - x.mean(axis=1, keepdims=True)) ** 2, axis=1))
        stats[done:done + k] = math.sqrt(n) * (s - sigma)
        done += k
    asym = (m4 - sigma2 * sigma2) / (4.0 * sigma2) if m4 is not None else math.nan
    return SigmaCLT(
        float(np.mean(stats)), float(np.var(stats, ddof=1)) if reps > 1 else 0.0, float(asym), int(n), int(reps)
    )


def heavy_tail_trajectory(F, n_grid, delta, rng):
    """``n^{delta/(2+delta)} |s_n - sigma|`` along one growing sample path.

    Meant for laws with finite variance but ``E|X|^{2+delta} = inf``; the
    trajectory is reported as is, without a verdict.
    """
    if not F.moment_finite(2):
        raise DivergentMomentError(f"{F.spec} has infinite variance")
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid[:-1], n_grid[1:])) or n_grid[0] < 2:
        raise DomainError("n_grid must be strictly increasing and start at >= 2")
    u = rng.random(n_grid[-1])
    u[u == 0.0] = 2.0**-54
    path = np.asarray(F.quantile(u), dtype=float)
    sigma = math.sqrt(F.variance)
    expo = delta / (2.0 + delta)
    rows = []
    for n in n_grid:
        s = float(np.std(path[:n]))
        rows.append({"n": n, "s": s, "statistic": n**expo * abs(s - sigma)})
    return rows
