"""Brownian bridge paths and the limiting laws of normalised distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dist import (
    ContinuousModel,
    DomainError,
    EmpiricalDistribution,
    PreconditionError,
    StepDistribution,
)
from .mallows import distance_step_step

DEFAULT_GRID = 4097
_BLOCK = 256


@dataclass(frozen=True, eq=False)
class BridgePath:
    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class LimitSample:
    """Independent draws from a limiting law plus a description of that law."""

    draws: np.ndarray
    kind: str  # "continuous" | "discrete"
    r: float
    source: str
    notes: tuple = field(default_factory=tuple)

    def summary(self):
        qs = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
        d = self.draws
        return {
            "kind": self.kind,
            "r": self.r,
            "source": self.source,
            "reps": int(d.size),
            "mean": float(np.mean(d)),
            "variance": float(np.var(d, ddof=1)) if d.size > 1 else 0.0,
            "quantiles": {f"{q:g}": float(v) for q, v in zip(qs, np.quantile(d, qs))},
            "notes": list(self.notes),
        }


def _check_grid(grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
        raise DomainError("bridge grid must be strictly increasing from 0 to 1")
    return g


def _bridge_block(grid, reps, rng):
    """``reps`` bridge paths on ``grid`` as rows, built as ``W(p) - p W(1)``."""
    steps = np.sqrt(np.diff(grid))
    inc = rng.standard_normal((reps, grid.size - 1)) * steps
    w = np.zeros((reps, grid.size))
    np.cumsum(inc, axis=1, out=w[:, 1:])
    b = w - grid * w[:, -1:]
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    return b


def sample_bridge(grid, rng):
    """One Brownian bridge path with the exact finite-dimensional law on ``grid``."""
    g = _check_grid(grid)
    return BridgePath(g, _bridge_block(g, 1, rng)[0])


def limit_discrete(F, r, reps, rng):
    """Draws of ``(sum_j |B(q_j)| (x_{j+1} - x_j)**r)**(1/r)`` for a step law ``F``."""
    if not isinstance(F, StepDistribution):
        raise TypeError("limit_discrete needs a StepDistribution")
    if reps < 1:
        raise DomainError("reps must be >= 1")
    src = F.spec
    if F.m == 1:
        return LimitSample(np.zeros(reps), "discrete", float(r), src, ("single atom: degenerate limit",))
    q = F.cum[:-1]
    gaps = np.diff(F.atoms) ** r
    grid = np.concatenate([[0.0], q, [1.0]])
    b = _bridge_block(grid, reps, rng)[:, 1:-1]
    draws = (np.abs(b) @ gaps) ** (1.0 / r)
    return LimitSample(draws, "discrete", float(r), src)


def _bounded_with_positive_ends(F):
    lo, hi = F.support
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return False
    return float(F.pdf(lo)) > 0.0 and float(F.pdf(hi)) > 0.0


def limit_continuous(F, r, reps, rng, grid_size=DEFAULT_GRID, *, monotone_tails=False, condition2=None):
    """Draws of ``(int_0^1 |B(p)|**r / f(Q(p))**r dp)**(1/r)``.

    Bounded-support models with a density positive at both endpoints use the
    whole grid (the integrand vanishes at 0 and 1).  Any other model needs a
    finite Condition 2 integral, certified by ``hazard.condition2_verdict``
    unless ``condition2="asserted"``, plus the caller's assertion that the
    density is monotone near both ends; the first and last grid cells are then
    excised and the excision is recorded in ``notes``.

    Raises
    ------
    PreconditionError
        If the hypotheses above cannot be established.
    DomainError
        If the density vanishes at an interior grid quantile.
    """
    if not isinstance(F, ContinuousModel):
        raise TypeError("limit_continuous needs a continuous model")
    if grid_size < 3:
        raise DomainError("grid_size must be >= 3")
    grid = np.linspace(0.0, 1.0, grid_size)
    dp = 1.0 / (grid_size - 1)
    notes = []
    bounded = _bounded_with_positive_ends(F)
    if not bounded:
        if condition2 != "asserted":
            from .hazard import condition2_verdict

            verdict = condition2_verdict(F)
            if verdict.verdict != "finite":
                raise PreconditionError(
                    f"{F.spec}: Condition 2 integral is {verdict.verdict}; "
                    f"the n^1/2 limit law is not available ({verdict.evidence.get('rule', '')})"
                )
        if not monotone_tails:
            raise PreconditionError(
                f"{F.spec}: unbounded or endpoint-vanishing density needs monotone tails; "
                "pass monotone_tails=True to assert it"
            )
        notes.append(f"excised [0, {dp:g}] and [1 - {dp:g}, 1]; bias vanishes under Condition 2")
    dens = np.asarray(F.pdf(F.quantile(grid[1:-1])), dtype=float)
    if np.any(~(dens > 0)) or not np.all(np.isfinite(dens)):
        raise DomainError(f"{F.spec}: density vanishes at an interior quantile")
    weight = np.zeros(grid_size)
    weight[1:-1] = dens ** (-float(r))
    if bounded:
        lo_idx, hi_idx = 0, grid_size
    else:
        lo_idx, hi_idx = 1, grid_size - 1
    w = weight[lo_idx:hi_idx]
    out = np.empty(reps)
    done = 0
    while done < reps:
        k = min(_BLOCK, reps - done)
        paths = _bridge_block(grid, k, rng)[:, lo_idx:hi_idx]
        out[done:done + k] = kernels.trapz_abs_pow(paths, w, r, dp)
        done += k
    return LimitSample(out ** (1.0 / r), "continuous", float(r), F.spec, tuple(notes))


def ks_critical(n1, n2, c_alpha=1.628):
    """Two-sample KS critical value ``c_alpha * sqrt(1/n1 + 1/n2)`` (1% level by default)."""
    return c_alpha * math.sqrt(1.0 / n1 + 1.0 / n2)


@dataclass(frozen=True)
class LimitComparison:
    ks: float
    d2: float
    n_normalized: int
    n_limit: int
    ks_critical_1pct: float

    def to_dict(self):
        return {
            "ks": self.ks,
            "d2": self.d2,
            "n_normalized": self.n_normalized,
            "n_limit": self.n_limit,
            "ks_critical_1pct": self.ks_critical_1pct,
        }


def compare_to_limit(normalized, limit):
    """KS statistic and ``d_2`` between normalised distances and limit draws."""
    a = np.sort(np.asarray(normalized, dtype=float))
    draws = limit.draws if isinstance(limit, LimitSample) else limit
    b = np.sort(np.asarray(draws, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("both samples must be nonempty")
    ks = kernels.ks_2samp(a, b)
    d2 = distance_step_step(
        EmpiricalDistribution(a, presorted=True), EmpiricalDistribution(b, presorted=True), 2
    ).value
    return LimitComparison(ks, d2, int(a.size), int(b.size), ks_critical(a.size, b.size))
