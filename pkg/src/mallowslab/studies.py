"""Monte Carlo studies of ``d_r(Fhat_n, F)`` and their reports.

Every replication draws from its own stream derived from
``(seed, component, n index, replication index)``, and results are stored by
index before any aggregation, so a report does not depend on the number of
worker threads.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bridge import DEFAULT_GRID, compare_to_limit, limit_continuous, limit_discrete
from .dist import (
    ContinuousModel,
    DivergentMomentError,
    DomainError,
    EmpiricalDistribution,
    PreconditionError,
    StepDistribution,
    parse_model,
    sample,
)
from .mallows import _uniform_cells, cell_integral, distance

QUANTILES = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
DEFAULT_N_GRID = tuple(2**k for k in range(6, 15))
DEFAULT_LIMIT_REPS = 10_000


class ConfigError(ValueError):
    """Invalid or incomplete study configuration."""


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

CONFIG_KEYS = {
    "model": "distribution spec, e.g. uniform(a=0,b=1) or bernoulli(p=0.5)",
    "r": "distance order, >= 1 (default 2)",
    "n_grid": "strictly increasing sample sizes, >= 3 of them: '64,128,256' or '2^6..2^14' (default 2^6..2^14)",
    "reps": "replications per n, >= 100 (default 1000)",
    "seed": "master seed, non-negative integer (default 0)",
    "alpha": "normalisation exponent in (0,1) or 'auto' (1/2 continuous, 1/(2r) discrete)",
    "grid_size": "bridge grid points for the continuous limit law (default 4097)",
    "out": "output path; '-' or empty writes to stdout",
    "format": "json or csv (default json)",
    "threads": "worker threads, >= 1 (default 1); does not change the report",
    "limit_reps": "draws from the limit law (default 10000)",
}


@dataclass(frozen=True)
class StudyConfig:
    model: str
    r: float = 2.0
    n_grid: tuple = DEFAULT_N_GRID
    reps: int = 1000
    seed: int = 0
    alpha: float | None = None
    grid_size: int = DEFAULT_GRID
    out: str | None = None
    format: str = "json"
    threads: int = 1
    limit_reps: int = DEFAULT_LIMIT_REPS

    def __post_init__(self):
        try:
            parse_model(self.model)
        except DomainError as exc:
            raise ConfigError(f"model: {exc}") from exc
        n = self.n_grid
        if len(n) < 3:
            raise ConfigError("n_grid needs at least 3 sample sizes for a slope fit")
        if any(int(v) != v or v < 1 for v in n) or any(b <= a for a, b in zip(n[:-1], n[1:])):
            raise ConfigError("n_grid must be strictly increasing positive integers")
        if not self.r >= 1 or not math.isfinite(self.r):
            raise ConfigError("r must be a finite number >= 1")
        if self.reps < 100:
            raise ConfigError("reps must be >= 100")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.grid_size < 3:
            raise ConfigError("grid_size must be >= 3")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.limit_reps < 1:
            raise ConfigError("limit_reps must be >= 1")

    def canonical(self):
        """The fields that determine the numbers in a report, in fixed order."""
        return {
            "model": parse_model(self.model).spec,
            "r": float(self.r),
            "n_grid": [int(v) for v in self.n_grid],
            "reps": int(self.reps),
            "seed": int(self.seed),
            "alpha": None if self.alpha is None else float(self.alpha),
            "grid_size": int(self.grid_size),
            "limit_reps": int(self.limit_reps),
        }

    def config_hash(self):
        return hashlib.sha256(_dumps(self.canonical()).encode()).hexdigest()


def _parse_n_grid(text):
    text = text.strip()
    if ".." in text:
        lo, hi = (s.strip() for s in text.split("..", 1))
        if not (lo.startswith("2^") and hi.startswith("2^")):
            raise ConfigError("range form of n_grid is 2^a..2^b")
        a, b = int(lo[2:]), int(hi[2:])
        return tuple(2**k for k in range(a, b + 1))
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.startswith("2^"):
            out.append(2 ** int(part[2:]))
        elif part:
            out.append(int(part))
    return tuple(out)


_CASTS = {
    "model": str,
    "r": float,
    "n_grid": _parse_n_grid,
    "reps": int,
    "seed": int,
    "alpha": lambda s: None if s.strip().lower() in ("", "auto", "none") else float(s),
    "grid_size": int,
    "out": lambda s: None if s.strip() in ("", "-") else s.strip(),
    "format": lambda s: s.strip().lower(),
    "threads": int,
    "limit_reps": int,
}


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = val
    return raw


def build_config(raw):
    """``StudyConfig`` from a mapping of key to string (or already typed) values."""
    kwargs = {}
    for key, val in raw.items():
        if key not in _CASTS:
            raise ConfigError(f"unknown key {key!r}")
        if val is None:
            continue
        try:
            kwargs[key] = _CASTS[key](val) if isinstance(val, str) else val
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    if "model" not in kwargs:
        raise ConfigError("model is required")
    if "n_grid" in kwargs:
        kwargs["n_grid"] = tuple(kwargs["n_grid"])
    return StudyConfig(**kwargs)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return build_config(parse_config_text(text))


# ----------------------------------------------------------------------------
# random streams
# ----------------------------------------------------------------------------


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if int(part) < 0:
        raise DomainError("stream path indices must be non-negative")
    return int(part)


def derive_stream(master, *path):
    """Independent generator for ``(master seed, component, indices...)``.

    Strings in ``path`` are hashed to integers; the result is a PCG64 stream
    seeded from ``SeedSequence(master, spawn_key=path)``.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_key(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


# ----------------------------------------------------------------------------
# statistics
# ----------------------------------------------------------------------------


def fit_slope(n, y):
    """OLS of ``log y`` on ``log n``; returns ``(slope, intercept, standard error)``."""
    x = np.log(np.asarray(n, dtype=float))
    z = np.log(np.asarray(y, dtype=float))
    xm, zm = x.mean(), z.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (z - zm)) / sxx)
    icpt = float(zm - slope * xm)
    k = x.size
    if k > 2:
        resid = z - (icpt + slope * x)
        se = math.sqrt(float(np.sum(resid**2)) / (k - 2) / sxx)
    else:
        se = math.nan
    return slope, icpt, se


def describe(values):
    v = np.asarray(values, dtype=float)
    qs = np.quantile(v, QUANTILES)
    return {
        "mean": float(np.mean(v)),
        "variance": float(np.var(v, ddof=1)) if v.size > 1 else 0.0,
        "quantiles": {f"{q:g}": float(x) for q, x in zip(QUANTILES, qs)},
    }


# ----------------------------------------------------------------------------
# Condition 1 tail integrals
# ----------------------------------------------------------------------------


def _step_tail(x, F, lo, hi):
    """``int_lo^hi (x - Q(p))^2 dp`` for a step law ``F``."""
    pts = np.concatenate([[lo], F.cum[(F.cum > lo) & (F.cum < hi)], [hi]])
    mids = F.quantile(0.5 * (pts[:-1] + pts[1:]))
    return float(np.sum(np.diff(pts) * (x - mids) ** 2))


def tail_integrals(sample_, F):
    """``n int_0^{1/n} (Fhat^{-1} - F^{-1})^2`` and its mirror on ``[1 - 1/n, 1]``."""
    n = sample_.n
    x1, xn = float(sample_.values[0]), float(sample_.values[-1])
    if isinstance(F, StepDistribution):
        return n * _step_tail(x1, F, 0.0, 1.0 / n), n * _step_tail(xn, F, 1.0 - 1.0 / n, 1.0)
    cells = _uniform_cells(F, n)
    if cells is not None:
        mean, dev = cells
        left = (x1 - mean[0]) ** 2 + n * dev[0]
        right = (xn - mean[-1]) ** 2 + n * dev[-1]
        return float(left), float(right)
    left = n * cell_integral(F, x1, 0.0, 1.0 / n, 2)[0]
    right = n * cell_integral(F, xn, 1.0 - 1.0 / n, 1.0, 2)[0]
    return left, right


def _tail_summary(n_grid, tails):
    rows = []
    for n, t in zip(n_grid, tails):
        t = np.asarray(t)
        rows.append(
            {
                "n": int(n),
                "left_median": float(np.median(t[:, 0])),
                "left_p90": float(np.quantile(t[:, 0], 0.9)),
                "right_median": float(np.median(t[:, 1])),
                "right_p90": float(np.quantile(t[:, 1], 0.9)),
            }
        )
    return rows


def _trend(rows, key):
    vals = [r[key] for r in rows]
    if all(b <= a for a, b in zip(vals[:-1], vals[1:])):
        return "decreasing"
    return "not monotone"


def _second_moment_ok(F):
    return not isinstance(F, ContinuousModel) or F.moment_finite(2)


def run_condition1_check(F, n_grid, reps, seed=0, threads=1):
    """Monte Carlo medians and 90th percentiles of both Condition 1 tail integrals.

    The trend is reported, never asserted.
    """
    if isinstance(F, str):
        F = parse_model(F)
    if not _second_moment_ok(F):
        raise DivergentMomentError(f"{F.spec} has infinite second moment")

    def task(i, j):
        rng = derive_stream(seed, "condition1", i, j)
        return tail_integrals(sample(F, n_grid[i], rng), F)

    tails = _run_grid(task, len(n_grid), reps, threads)
    rows = _tail_summary(n_grid, tails)
    return {
        "model": F.spec,
        "rows": rows,
        "left_trend": _trend(rows, "left_median"),
        "right_trend": _trend(rows, "right_median"),
    }


# ----------------------------------------------------------------------------
# convergence study
# ----------------------------------------------------------------------------


def _run_grid(task, n_count, reps, threads):
    """``out[i][j] = task(i, j)``, filled in index order regardless of scheduling."""
    jobs = [(i, j) for i in range(n_count) for j in range(reps)]
    if threads == 1:
        flat = [task(i, j) for i, j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(lambda ij: task(*ij), jobs, chunksize=64))
    return [flat[i * reps:(i + 1) * reps] for i in range(n_count)]


def replicate_distances(F, n, r, reps, seed, n_index=0, threads=1):
    """``reps`` values of ``d_r(Fhat_n, F)`` on the streams a study uses for ``n_grid[n_index]``."""
    if isinstance(F, str):
        F = parse_model(F)

    def task(_, j):
        rng = derive_stream(seed, "distance", n_index, j)
        return distance(sample(F, n, rng), F, r).value

    return np.array(_run_grid(task, 1, reps, threads)[0])


@dataclass
class StudyReport:
    config: dict
    kind: str
    alpha: float
    per_n: list
    slope: dict
    limit: dict | None
    diagnostics: list
    condition1: dict | None
    provenance: dict
    normalized_at_max: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "config": self.config,
            "kind": self.kind,
            "alpha": self.alpha,
            "per_n": self.per_n,
            "slope": self.slope,
            "limit": self.limit,
            "diagnostics": self.diagnostics,
            "condition1": self.condition1,
            "provenance": self.provenance,
        }


def _limit_sample(F, r, cfg, diagnostics):
    rng = derive_stream(cfg.seed, "limit")
    if isinstance(F, StepDistribution):
        return limit_discrete(F, r, cfg.limit_reps, rng)
    try:
        return limit_continuous(F, r, cfg.limit_reps, rng, cfg.grid_size)
    except (PreconditionError, DomainError) as exc:
        diagnostics.append(f"limit law unavailable: {exc}")
        return None


def run_convergence_study(config, limit=True):
    """Distances ``d_r(Fhat_n, F)`` over the n grid, slope fits and the limit comparison.

    Raises
    ------
    DivergentMomentError
        If ``E|X|^r`` is infinite under the model.
    """
    F = parse_model(config.model)
    r = float(config.r)
    if isinstance(F, ContinuousModel) and not F.moment_finite(r):
        raise DivergentMomentError(f"E|X|^{r:g} is infinite for {F.spec}")
    discrete = isinstance(F, StepDistribution)
    kind = "discrete" if discrete else "continuous"
    theory_alpha = 1.0 / (2.0 * r) if discrete else 0.5
    alpha = theory_alpha if config.alpha is None else float(config.alpha)
    n_grid = [int(v) for v in config.n_grid]
    with_c1 = _second_moment_ok(F)

    def task(i, j):
        rng = derive_stream(config.seed, "distance", i, j)
        s = sample(F, n_grid[i], rng)
        d = distance(s, F, r).value
        if with_c1:
            return (d, *tail_integrals(s, F))
        return (d, math.nan, math.nan)

    results = _run_grid(task, len(n_grid), config.reps, config.threads)
    per_n = []
    means, medians = [], []
    norm_max = None
    for n, res in zip(n_grid, results):
        d = np.array([row[0] for row in res])
        norm = n**alpha * d
        row = {"n": n, "reps": int(d.size), "distance": describe(d), "normalized": describe(norm)}
        per_n.append(row)
        means.append(row["distance"]["mean"])
        medians.append(row["distance"]["quantiles"]["0.5"])
        norm_max = n**theory_alpha * d
    diagnostics = []
    slope = {"ols": None, "intercept": None, "se": None, "median_ols": None, "median_se": None}
    if min(means) > 0:
        b, a, se = fit_slope(n_grid, means)
        slope.update(ols=b, intercept=a, se=se)
    else:
        diagnostics.append("mean distance is zero at some n; slope not fitted")
    if min(medians) > 0:
        b, _, se = fit_slope(n_grid, medians)
        slope.update(median_ols=b, median_se=se)
    slope["expected"] = -theory_alpha
    limit_block = None
    if limit:
        ls = _limit_sample(F, r, config, diagnostics)
        if ls is not None:
            cmp = compare_to_limit(norm_max, ls)
            limit_block = {
                "n": n_grid[-1],
                "normalization": theory_alpha,
                **cmp.to_dict(),
                "law": ls.summary(),
            }
    condition1 = None
    if with_c1:
        tails = [[row[1:] for row in res] for res in results]
        rows = _tail_summary(n_grid, tails)
        condition1 = {
            "rows": rows,
            "left_trend": _trend(rows, "left_median"),
            "right_trend": _trend(rows, "right_median"),
        }
    provenance = {
        "config_hash": config.config_hash(),
        "seed": int(config.seed),
        "version": __version__,
    }
    return StudyReport(
        config.canonical(), kind, alpha, per_n, slope, limit_block, diagnostics, condition1, provenance, norm_max
    )


# ----------------------------------------------------------------------------
# serialisation
# ----------------------------------------------------------------------------


def _fmt_float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", ")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(obj):
    out = []
    _encode(obj, out)
    return "".join(out)


def dumps_json(obj):
    """Deterministic JSON: insertion key order, 17 significant digits, NaN/Infinity tokens."""
    return _dumps(obj) + "\n"


CSV_COLUMNS = (
    ["n", "reps", "mean_d", "var_d"]
    + [f"q{int(round(q * 100)):02d}_d" for q in QUANTILES]
    + ["mean_norm", "var_norm"]
    + [f"q{int(round(q * 100)):02d}_norm" for q in QUANTILES]
)


def _csv_rows(payload):
    for row in payload["per_n"]:
        d, z = row["distance"], row["normalized"]
        yield (
            [row["n"], row["reps"], d["mean"], d["variance"]]
            + list(d["quantiles"].values())
            + [z["mean"], z["variance"]]
            + list(z["quantiles"].values())
        )


def emit_report(report, fmt="json", path=None):
    """Serialise a report (or its parsed JSON payload) and optionally write it.

    CSV has one row per n with columns ``CSV_COLUMNS``: sample size,
    replications, then mean, variance and the 1/5/25/50/75/95/99% quantiles
    of ``d_r`` and of ``n^alpha d_r``.
    """
    payload = report.to_dict() if isinstance(report, StudyReport) else report
    if fmt == "json":
        data = dumps_json(payload).encode()
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in _csv_rows(payload):
            w.writerow([v if isinstance(v, int) else _fmt_float(v) for v in row])
        data = buf.getvalue().encode()
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            with open(path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc
    return data


def load_report(data):
    """Parse JSON report bytes back into a payload with the original key order."""
    return json.loads(data)
