"""Two-sided hazard function and the tail diagnostics built on it.

The hazard is ``f / Fbar`` at or above the median and ``f / F`` below it.
Tail verdicts are three-valued: no finite computation can prove that an
integral diverges or that a hazard grows without bound, so every verdict
carries the numbers it was based on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quad
from .dist import ContinuousModel, DivergentMomentError, DomainError
from .mallows import distance_emp_cont

LEVELS = tuple(range(2, 9))  # tail probabilities 10^-2 .. 10^-8
_SCAN_PER_DECADE = 16
_SCAN_DEPTH = 10  # survival levels down to sf(t) * 10^-10


@dataclass(frozen=True)
class TailVerdict:
    quantity: str  # "condition2-integral" | "hazard-divergence" | "mgf-radius"
    verdict: str  # "finite" | "divergent" | "inconclusive"
    value: float | None = None
    error: float | None = None
    evidence: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "verdict": self.verdict,
            "value": self.value,
            "error": self.error,
            "evidence": self.evidence,
        }


def _require_continuous(F):
    if not isinstance(F, ContinuousModel):
        raise TypeError("hazard diagnostics need a continuous model")


def _median(F):
    return float(F.quantile(0.5))


def hazard_fn(F, x):
    """Two-sided hazard at ``x`` (scalar or array) inside the open support."""
    _require_continuous(F)
    x = np.asarray(x, dtype=float)
    lo, hi = F.support
    if np.any(~((x > lo) & (x < hi))):
        raise DomainError(f"hazard needs x inside the open support ({lo}, {hi})")
    f = F.pdf(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(x >= _median(F), f / F.sf(x), f / F.cdf(x))
    return float(h) if h.ndim == 0 else h


def _right_hazard(F, x):
    return F.pdf(x) / F.sf(x)


def _left_hazard(F, x):
    return F.pdf(x) / F.cdf(x)


# ----------------------------------------------------------------------------
# tail moments
# ----------------------------------------------------------------------------


def _check_second_moment(F):
    if not F.moment_finite(2):
        raise DivergentMomentError(f"{F.spec} has no finite second moment")


def tail_variance(F, t, side="right"):
    """``Var(X | X > t)`` (``side="right"``) or ``Var(X | X < t)``; 0 for an empty tail."""
    _require_continuous(F)
    _check_second_moment(F)
    m, _ = quad.survival_expectation(F, lambda x: float(x) - t, t, side)
    v, _ = quad.survival_expectation(F, lambda x: (float(x) - t - m) ** 2, t, side)
    return max(v, 0.0)


def tail_second_moment_ratio(F, t, side="right"):
    """``E((X - t)**2 1{X > t}) / Fbar(t)``, mirrored for ``side="left"``."""
    _require_continuous(F)
    _check_second_moment(F)
    v, _ = quad.survival_expectation(F, lambda x: (float(x) - t) ** 2, t, side)
    return v


# ----------------------------------------------------------------------------
# hazard profiles on tail grids
# ----------------------------------------------------------------------------


def _tail_points(F, side):
    """Quantiles ``xi_{1-10^-k}`` (right) or ``xi_{10^-k}`` (left) for the verdict grid."""
    s = np.array([10.0**-k for k in LEVELS])
    if side == "right":
        return np.asarray(F.isf(s), dtype=float)
    return np.asarray(F.quantile(s), dtype=float)


def _hazard_trend(h):
    """Classify a hazard sequence read outward along the tail grid."""
    h = np.asarray(h, dtype=float)
    d = np.diff(h)
    if np.all(d > 0) and h[-1] >= 2.0 * h[0]:
        return "divergent"
    if np.all(d < 0) and h[-1] <= 0.5 * h[0]:
        return "vanishing"
    last = h[-3:]
    if np.max(last) - np.min(last) <= 0.05 * np.max(np.abs(last)):
        return "bounded"
    return "inconclusive"


def _tail_profile(F, side):
    x = _tail_points(F, side)
    h = _right_hazard(F, x) if side == "right" else _left_hazard(F, x)
    return x, np.asarray(h, dtype=float), _hazard_trend(h)


def hazard_divergence_verdict(F):
    """Does ``h(x) -> inf`` in both tails?

    ``divergent`` when both tail profiles grow monotonically by at least a
    factor two across ``p = 10^-2 .. 10^-8``; ``finite`` (value = the smallest
    limiting hazard, 0 when a tail vanishes) when some tail is bounded or
    vanishing; ``inconclusive`` otherwise.
    """
    _require_continuous(F)
    evidence = {}
    trends = []
    finals = []
    for side in ("left", "right"):
        x, h, trend = _tail_profile(F, side)
        evidence[side] = {"x": x.tolist(), "h": h.tolist(), "trend": trend}
        trends.append(trend)
        finals.append(0.0 if trend == "vanishing" else float(h[-1]))
    if all(t == "divergent" for t in trends):
        return TailVerdict("hazard-divergence", "divergent", None, None, evidence)
    if any(t in ("bounded", "vanishing") for t in trends):
        bounded = [v for t, v in zip(trends, finals) if t in ("bounded", "vanishing")]
        return TailVerdict("hazard-divergence", "finite", min(bounded), None, evidence)
    return TailVerdict("hazard-divergence", "inconclusive", None, None, evidence)


def _scan(F, t, side):
    """Hazard on a log-spaced survival grid from ``t`` outward to ``10^-10`` of its tail mass."""
    s0 = float(F.sf(t)) if side == "right" else float(F.cdf(t))
    if s0 <= 0.0:
        return np.array([]), np.array([])
    j = np.arange(_SCAN_DEPTH * _SCAN_PER_DECADE + 1)
    s = s0 * 10.0 ** (-j / _SCAN_PER_DECADE)
    x = np.asarray(F.isf(s) if side == "right" else F.quantile(s), dtype=float)
    x[0] = t
    lo, hi = F.support
    keep = (x > lo) & (x < hi)
    x = x[keep]
    h = _right_hazard(F, x) if side == "right" else _left_hazard(F, x)
    return x, np.asarray(h, dtype=float)


def tail_hazard_extremes(F, t, side="right"):
    """``(inf h, sup h)`` over the tail beyond ``t``.

    Taken from a dense survival-level scan; a tail whose verdict profile
    diverges has ``sup = inf`` and one that vanishes has ``inf = 0``.
    """
    x, h = _scan(F, t, side)
    if x.size == 0:
        return math.nan, math.nan
    _, _, trend = _tail_profile(F, side)
    bound = F.support[1] if side == "right" else F.support[0]
    inf_h = float(np.min(h))
    sup_h = float(np.max(h))
    if trend == "vanishing":
        inf_h = 0.0
    if trend == "divergent" or math.isfinite(bound):
        # at a finite endpoint Fbar -> 0 faster than f, so h is unbounded there
        if math.isfinite(bound) or trend == "divergent":
            sup_h = math.inf
    return inf_h, sup_h


@dataclass(frozen=True)
class SandwichRecord:
    lower: float
    value: float
    upper: float
    satisfied: bool
    inf_h: float
    sup_h: float
    trivial: bool

    def to_dict(self):
        return dict(self.__dict__)


def check_variance_sandwich(F, t, side="right"):
    """``1/(12 sup h^2) <= Var X_t <= 4/inf h^2`` over the tail beyond ``t``.

    ``t`` must be at or beyond the median on the chosen side.
    """
    _require_continuous(F)
    med = _median(F)
    if (side == "right" and t < med) or (side == "left" and t > med):
        raise DomainError(f"sandwich needs t on the {side} of the median {med:g}")
    value = tail_variance(F, t, side)
    inf_h, sup_h = tail_hazard_extremes(F, t, side)
    lower = 0.0 if not math.isfinite(sup_h) else 1.0 / (12.0 * sup_h * sup_h)
    upper = math.inf if inf_h == 0.0 else 4.0 / (inf_h * inf_h)
    slack = 1e-9 * max(value, 1e-300)
    ok = lower - slack <= value <= upper + slack
    trivial = lower == 0.0 or math.isinf(upper)
    return SandwichRecord(lower, value, upper, bool(ok), inf_h, sup_h, trivial)


@dataclass(frozen=True)
class MomentBoundRecord:
    ratio: float
    bound: float
    satisfied: bool

    def to_dict(self):
        return dict(self.__dict__)


def check_second_moment_bound(F, t, side="right"):
    """``E((X-t)^2 1{X>t}) / Fbar(t) <= 4 / inf_{x>=t} h(x)^2``."""
    ratio = tail_second_moment_ratio(F, t, side)
    inf_h, _ = tail_hazard_extremes(F, t, side)
    bound = math.inf if not inf_h > 0 else 4.0 / (inf_h * inf_h)
    return MomentBoundRecord(ratio, bound, bool(ratio <= bound * (1 + 1e-9)))


# ----------------------------------------------------------------------------
# Hardy inequality
# ----------------------------------------------------------------------------


_TEST_FUNCTIONS = {
    "zero": (lambda x, t: 0.0, lambda x, t: 0.0),
    "linear": (lambda x, t: x - t, lambda x, t: 1.0),
    "quadratic": (lambda x, t: (x - t) ** 2, lambda x, t: 2.0 * (x - t)),
}


@dataclass(frozen=True)
class HardyRecord:
    lhs: float
    rhs: float
    satisfied: bool

    def to_dict(self):
        return dict(self.__dict__)


def verify_hardy(F, t, G="linear"):
    """Check ``int_t^inf f G^2 <= 4 int_t^inf (Fbar^2 / f) g^2`` with ``g = G'``.

    ``G`` is one of ``"linear"`` (``x - t``), ``"quadratic"`` (``(x - t)^2``),
    ``"zero"``, or a pair of callables ``(G, g)`` with ``G(t) = 0``.
    """
    _require_continuous(F)
    if isinstance(G, str):
        Gf, gf = _TEST_FUNCTIONS[G]
        G_, g_ = (lambda x: Gf(x, t)), (lambda x: gf(x, t))
    else:
        G_, g_ = G
    mass = float(F.sf(t))
    if mass <= 0:
        return HardyRecord(0.0, 0.0, True)

    def rhs_integrand(x):
        x = float(x)
        f = float(F.pdf(x))
        if f <= 0.0:
            return 0.0
        return (g_(x) * float(F.sf(x)) / f) ** 2

    try:
        lhs, _ = quad.survival_expectation(F, lambda x: G_(float(x)) ** 2, t)
        rhs, _ = quad.survival_expectation(F, rhs_integrand, t)
    except quad.QuadratureDivergence as exc:
        raise DivergentMomentError(f"Hardy integrals diverge for {F.spec} at t={t}") from exc
    lhs *= mass
    rhs *= 4.0 * mass
    return HardyRecord(lhs, rhs, bool(lhs <= rhs * (1 + 1e-9) + 1e-300))


# ----------------------------------------------------------------------------
# Condition 2 and the MGF radius
# ----------------------------------------------------------------------------


def _c2_integrand(F, x):
    x = float(x)
    f = float(F.pdf(x))
    if not f > 0.0:
        return 0.0
    return float(F.cdf(x)) * float(F.sf(x)) / f


def _classify_increments(d, total):
    """Classify a tail from its last increments: shrinking geometrically, or not decreasing."""
    d = np.asarray(d, dtype=float)
    tiny = 1e-13 * max(abs(total), 1e-300)
    last = d[-4:]
    if np.all(last[1:] <= tiny):
        return "finite"
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = last[1:] / last[:-1]
    if np.all((ratios < 0.5) | (last[1:] <= tiny)):
        return "finite"
    if np.all(np.diff(last) >= 0):
        return "divergent"
    return "inconclusive"


_DEEP_LEVELS = (8, 16, 32, 64)  # fallback tail probabilities 10^-k
_BETA_DIVERGENT = 1.05
_BETA_FINITE = 1.2


def _decay_exponent(F, side, med):
    """Local power ``beta`` with ``F(1-F)/f ~ |x - median|^-beta`` deep in a tail.

    Returns ``(beta, extra, x, integrand)`` where ``extra`` is the integral
    between the deep grid points (beyond ``10^-8``).
    """
    s = np.array([10.0**-k for k in _DEEP_LEVELS])
    x = np.asarray(F.isf(s) if side == "right" else F.quantile(s), dtype=float)
    vals = np.array([_c2_integrand(F, v) for v in x])
    extra = 0.0
    for a, b in zip(x[:-1], x[1:]):
        lo_, hi_ = (b, a) if side == "left" else (a, b)
        extra += quad.quad(lambda y: _c2_integrand(F, y), lo_, hi_)[0]
    d = np.abs(x - med)
    if not (vals[-1] > 0 and vals[-2] > 0 and d[-1] > d[-2] > 0):
        return math.nan, extra, x, vals
    beta = -math.log(vals[-1] / vals[-2]) / math.log(d[-1] / d[-2])
    return beta, extra, x, vals


def condition2_verdict(F):
    """Finiteness of ``int F(1-F)/f dx`` (equivalently ``int 1/h``).

    The integral is evaluated over ``[xi_{1/M}, xi_{1-1/M}]`` for
    ``M = 10^2 .. 10^8``.  Per tail: finite when the last three increment
    ratios are below 0.5, divergent when the increments are non-decreasing
    over the last three expansions.  An undecided unbounded tail is then
    followed out to ``10^-64`` and its integrand compared with a power of
    ``|x - median|``: decay no faster than ``|x|^-1.05`` is declared divergent,
    decay at least as fast as ``|x|^-1.2`` finite (the remainder past the last
    grid point is extrapolated and added to both the value and the error).
    """
    _require_continuous(F)
    med = _median(F)
    q_lo, q_hi = float(F.quantile(0.01)), float(F.isf(0.01))
    core, err = quad.quad(lambda x: _c2_integrand(F, x), q_lo, q_hi)
    total = core
    evidence = {"core": core}
    sides = {}
    for side in ("left", "right"):
        pts = np.concatenate([[q_lo if side == "left" else q_hi], _tail_points(F, side)])
        incs = []
        for a, b in zip(pts[:-1], pts[1:]):
            lo_, hi_ = (b, a) if side == "left" else (a, b)
            v, e = quad.quad(lambda x: _c2_integrand(F, x), lo_, hi_)
            incs.append(v)
            err += e
        total += sum(incs)
        sides[side] = (pts, incs)
    verdicts = {}
    for side, (pts, incs) in sides.items():
        verdict = _classify_increments(incs, total)
        info = {
            "x": [float(v) for v in pts],
            "increments": [float(v) for v in incs],
            "rule": "increments",
        }
        bound = F.support[0] if side == "left" else F.support[1]
        if verdict == "inconclusive" and not math.isfinite(bound):
            beta, extra, xs, vals = _decay_exponent(F, side, med)
            info.update(
                rule="decay exponent",
                beta=beta,
                deep_x=[float(v) for v in xs],
                deep_integrand=[float(v) for v in vals],
            )
            if beta <= _BETA_DIVERGENT:
                verdict = "divergent"
            elif beta >= _BETA_FINITE:
                verdict = "finite"
                rest = float(vals[-1] * abs(xs[-1] - med) / (beta - 1.0))
                total += extra + rest
                err += rest
        info["verdict"] = verdict
        verdicts[side] = verdict
        evidence[side] = info
    if all(v == "finite" for v in verdicts.values()):
        evidence["rule"] = "finite tails"
        return TailVerdict("condition2-integral", "finite", total, err, evidence)
    if any(v == "divergent" for v in verdicts.values()):
        evidence["rule"] = "divergent tail: " + ",".join(s for s, v in verdicts.items() if v == "divergent")
        return TailVerdict("condition2-integral", "divergent", None, None, evidence)
    evidence["rule"] = "undecided tail"
    return TailVerdict("condition2-integral", "inconclusive", total, err, evidence)


def mgf_radius_bound(F, t=0.0):
    """``c = inf_{|x| >= t} h(x)``; the moment generating function is finite on ``(-c, c)``."""
    _require_continuous(F)
    if t < 0:
        raise DomainError("t must be >= 0")
    lo, hi = F.support
    med = _median(F)
    vals = []
    for side, sign in (("right", 1.0), ("left", -1.0)):
        start = sign * t
        if side == "right":
            if start >= hi:
                continue
            start = max(start, lo)
        else:
            if start <= lo:
                continue
            start = min(start, hi)
        _, _, trend = _tail_profile(F, side)
        if trend == "vanishing":
            vals.append(0.0)
            continue
        # dense scan from the start point outward; stay on the correct half of the support
        x_far = float(F.isf(1e-10)) if side == "right" else float(F.quantile(1e-10))
        grid = np.linspace(start, x_far, 2001)
        x_scan, _ = _scan(F, max(start, med) if side == "right" else min(start, med), side)
        grid = np.concatenate([grid, x_scan])
        grid = grid[(grid > lo) & (grid < hi)]
        if side == "right":
            grid = grid[grid >= sign * t]
        else:
            grid = grid[grid <= -t]
        if grid.size:
            vals.append(float(np.min(hazard_fn(F, grid))))
    if not vals:
        return math.inf
    return max(min(vals), 0.0)


@dataclass(frozen=True)
class SurvivalRecord:
    direct: float
    reconstructed: float
    satisfied: bool

    def to_dict(self):
        return dict(self.__dict__)


def survival_reconstruction_check(F, t, x, rtol=1e-6):
    """Compare ``Fbar(x)`` with ``Fbar(t) exp(-int_t^x f/Fbar)`` (right-hand hazard)."""
    _require_continuous(F)
    if x < t:
        raise DomainError("need t <= x")
    lo, hi = F.support
    if not (lo < t < hi and lo < x < hi):
        raise DomainError("t and x must lie inside the open support")
    direct = float(F.sf(x))
    integral, _ = quad.quad(lambda y: float(_right_hazard(F, y)), t, x, epsrel=1e-13)
    recon = float(F.sf(t)) * math.exp(-integral)
    ok = abs(direct - recon) <= rtol * abs(direct)
    return SurvivalRecord(direct, recon, bool(ok))


# ----------------------------------------------------------------------------
# decomposition of n d_2^2
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    random_part: float
    deterministic_part: float
    n_d2_squared: float
    relative_error: float
    last_cell_bound: float

    def to_dict(self):
        return dict(self.__dict__)


def variance_decomposition(sample, F):
    """Split ``n d_2^2(Fhat_n, F)`` into ``sum (X_(i) - a_i)^2`` and a deterministic part.

    ``a_i = n int_{(i-1)/n}^{i/n} Q(p) dp``.  The cell integrals are done by
    quadrature here and compared against the distance code.  Also returns
    ``(X_(n) - a_n)^2 + Var X_{xi_{(n-1)/n}}``, which never exceeds the total.
    """
    _require_continuous(F)
    _check_second_moment(F)
    n = sample.n
    edges = np.arange(n + 1, dtype=float) / n
    a = np.empty(n)
    dev = np.empty(n)
    for i in range(n):
        lo, hi = float(edges[i]), float(edges[i + 1])
        m, _ = quad.quantile_integral(F, lambda q: float(q), lo, hi)
        a[i] = m * n
        ai = a[i]
        dev[i], _ = quad.quantile_integral(F, lambda q: (float(q) - ai) ** 2, lo, hi)
    random_part = float(np.sum((sample.values - a) ** 2))
    deterministic = float(n * np.sum(dev))
    total = n * distance_emp_cont(sample, F, 2).value_pow
    rel = abs(random_part + deterministic - total) / total if total > 0 else abs(random_part + deterministic)
    t_last = float(F.quantile((n - 1) / n)) if n > 1 else -math.inf
    tail_var = tail_variance(F, t_last) if n > 1 else F.variance
    last = (float(sample.values[-1]) - a[-1]) ** 2 + tail_var
    return Decomposition(random_part, deterministic, float(total), float(rel), float(last))
