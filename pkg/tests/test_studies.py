import json
import math

import numpy as np
import pytest
from scipy import stats

from mallowslab import studies
from mallowslab.dist import DivergentMomentError, StepDistribution, parse_model
from mallowslab.studies import (
    CSV_COLUMNS,
    ConfigError,
    StudyConfig,
    build_config,
    derive_stream,
    emit_report,
    fit_slope,
    load_report,
    parse_config_text,
    run_condition1_check,
    run_convergence_study,
)

SMALL = dict(n_grid=(32, 64, 128), reps=100, limit_reps=500)


# --- configuration ------------------------------------------------------------------


def test_parse_config_file():
    text = """
    # a study
    model = normal(mu=0,sigma=1)
    r = 2
    n_grid = 2^6..2^8
    reps = 200
    seed = 11
    alpha = auto
    grid_size = 1025
    out = -
    format = csv
    threads = 2
    """
    cfg = build_config(parse_config_text(text))
    assert cfg.n_grid == (64, 128, 256)
    assert cfg.alpha is None and cfg.out is None
    assert cfg.format == "csv" and cfg.threads == 2 and cfg.grid_size == 1025


@pytest.mark.parametrize(
    "text",
    [
        "model = uniform(a=0,b=1)\nn_grid = 64,32,128",
        "model = uniform(a=0,b=1)\nn_grid = 64,128",
        "model = uniform(a=0,b=1)\nreps = 99",
        "model = uniform(a=0,b=1)\nalpha = 1.0",
        "model = uniform(a=0,b=1)\nr = 0.5",
        "model = uniform(a=0,b=1)\nformat = xml",
        "model = uniform(a=0,b=1)\nthreads = 0",
        "model = uniform(a=0,b=1)\ncolour = red",
        "model = uniform(a=0,b=1)\nmodel = normal(mu=0,sigma=1)",
        "model = nosuch(a=1)",
        "r = 2",
        "model = uniform(a=0,b=1)\nreps = many",
        "just text",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        build_config(parse_config_text(text))


def test_config_hash_ignores_execution_keys():
    a = StudyConfig(model="uniform(a=0,b=1)", threads=1, format="json")
    b = StudyConfig(model="uniform(a=0,b=1)", threads=4, format="csv", out="x.csv")
    c = StudyConfig(model="uniform(a=0,b=1)", seed=1)
    assert a.config_hash() == b.config_hash() != c.config_hash()


# --- streams ------------------------------------------------------------------------


def test_stream_reproducible():
    a = derive_stream(5, "distance", 2, 7).random(8)
    b = derive_stream(5, "distance", 2, 7).random(8)
    assert np.array_equal(a, b)


def test_streams_differ_by_component_and_index():
    base = derive_stream(5, "distance", 0, 0).random(4)
    for other in (derive_stream(5, "limit", 0, 0), derive_stream(5, "distance", 0, 1), derive_stream(6, "distance", 0, 0)):
        assert not np.array_equal(base, other.random(4))


def test_streams_independence_smoke():
    # 10^4 pairs (first draw of replication j, first draw of replication j+1) on a 10x10 table
    u = np.array([derive_stream(1, "distance", 0, j).random() for j in range(10_001)])
    a, b = u[:-1], u[1:]
    table = np.histogram2d(a, b, bins=10, range=[[0, 1], [0, 1]])[0]
    chi2, p, _, _ = stats.chi2_contingency(table)
    assert p > 0.001


# --- slope fit ----------------------------------------------------------------------------


@pytest.mark.parametrize("beta", [0.5, 0.25, 0.125, 1.3])
def test_slope_recovers_exact_power_law(beta):
    n = np.array([2**k for k in range(6, 15)], dtype=float)
    slope, icpt, se = fit_slope(n, 3.7 * n**-beta)
    assert slope == pytest.approx(-beta, abs=1e-12)
    assert icpt == pytest.approx(math.log(3.7), abs=1e-11)
    assert se < 1e-12


# --- convergence study --------------------------------------------------------------------


def _study(model, **kw):
    cfg = StudyConfig(model=model, **{**SMALL, **kw})
    return run_convergence_study(cfg)


def test_uniform_study_shape():
    rep = _study("uniform(a=0,b=1)")
    assert [row["n"] for row in rep.per_n] == [32, 64, 128]
    assert rep.kind == "continuous" and rep.alpha == 0.5
    assert rep.limit is not None and rep.limit["n"] == 128
    assert rep.condition1 is not None and len(rep.condition1["rows"]) == 3
    assert rep.slope["expected"] == -0.5


def test_discrete_alpha_default():
    rep = _study("bernoulli(p=0.5)", r=4.0)
    assert rep.kind == "discrete"
    assert rep.alpha == pytest.approx(1 / 8)


def test_custom_alpha_used_for_normalisation():
    rep = _study("uniform(a=0,b=1)", alpha=0.3)
    row = rep.per_n[0]
    assert row["normalized"]["mean"] == pytest.approx(32**0.3 * row["distance"]["mean"], rel=1e-12)


def test_divergent_moment_refused():
    with pytest.raises(DivergentMomentError):
        _study("pareto(alpha=1.5,xm=1)")


def test_limit_unavailable_gives_diagnostic():
    rep = _study("normal(mu=0,sigma=1)")
    assert rep.limit is None
    assert any("limit law unavailable" in d for d in rep.diagnostics)
    assert rep.slope["ols"] is not None


def test_study_deterministic_across_threads():
    cfg1 = StudyConfig(model="uniform(a=0,b=1)", threads=1, **SMALL)
    cfg3 = StudyConfig(model="uniform(a=0,b=1)", threads=3, **SMALL)
    assert emit_report(run_convergence_study(cfg1)) == emit_report(run_convergence_study(cfg3))


def test_study_rerun_identical():
    assert emit_report(_study("bernoulli(p=0.3)")) == emit_report(_study("bernoulli(p=0.3)"))


def test_seed_changes_report():
    assert emit_report(_study("uniform(a=0,b=1)", seed=1)) != emit_report(_study("uniform(a=0,b=1)", seed=2))


# --- Condition 1 ---------------------------------------------------------------------------


def test_condition1_uniform_decreasing():
    out = run_condition1_check(parse_model("uniform(a=0,b=1)"), [2**k for k in range(6, 15)], 200, seed=3)
    assert out["left_trend"] == "decreasing"
    assert out["right_trend"] == "decreasing"


def test_condition1_normal_decreasing():
    out = run_condition1_check(parse_model("normal(mu=0,sigma=1)"), [2**k for k in (6, 9, 12, 15)], 200, seed=4)
    assert out["left_trend"] == "decreasing"
    assert out["right_trend"] == "decreasing"


def test_condition1_tight_step_model_hits_zero():
    F = StepDistribution([0.0, 1.0], [0.5, 0.5])
    out = run_condition1_check(F, [64, 128, 256], 100, seed=5)
    assert all(r["left_median"] == 0.0 and r["right_median"] == 0.0 for r in out["rows"])


def test_tail_integral_matches_quadrature(rng):
    from mallowslab.dist import sample
    from mallowslab.mallows import cell_integral

    for spec in ("normal(mu=0,sigma=1)", "exponential(rate=1)"):
        F = parse_model(spec)
        s = sample(F, 50, rng)
        left, right = studies.tail_integrals(s, F)
        assert left == pytest.approx(50 * cell_integral(F, float(s.values[0]), 0, 1 / 50, 2)[0], rel=1e-8)
        assert right == pytest.approx(50 * cell_integral(F, float(s.values[-1]), 1 - 1 / 50, 1, 2)[0], rel=1e-8)


def test_condition1_refuses_infinite_second_moment():
    with pytest.raises(DivergentMomentError):
        run_condition1_check(parse_model("pareto(alpha=1.5,xm=1)"), [10, 20, 40], 10)


# --- serialisation --------------------------------------------------------------------------


def test_json_round_trip_byte_identical():
    data = emit_report(_study("uniform(a=0,b=1)"))
    assert emit_report(load_report(data)) == data


def test_json_uses_17_digits_and_parses():
    data = emit_report(_study("uniform(a=0,b=1)"))
    payload = json.loads(data)
    assert list(payload) == ["config", "kind", "alpha", "per_n", "slope", "limit", "diagnostics", "condition1", "provenance"]
    assert studies.dumps_json({"x": 0.1}) == '{"x": 0.10000000000000001}\n'
    assert studies.dumps_json({"x": 1.0, "y": math.nan, "z": -math.inf}) == '{"x": 1.0, "y": NaN, "z": -Infinity}\n'


def test_csv_rows_match_grid():
    text = emit_report(_study("uniform(a=0,b=1)"), "csv").decode()
    lines = text.strip().split("\n")
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) - 1 == 3


def test_provenance_reproduces_config_hash():
    cfg = StudyConfig(model="uniform(a=0,b=1)", **SMALL)
    payload = load_report(emit_report(run_convergence_study(cfg)))
    assert payload["provenance"]["config_hash"] == cfg.config_hash()
    rebuilt = build_config({k: v for k, v in payload["config"].items() if v is not None})
    assert rebuilt.config_hash() == cfg.config_hash()


def test_unwritable_path_mentions_path(tmp_path):
    bad = tmp_path / "missing" / "report.json"
    with pytest.raises(OSError, match="missing"):
        emit_report({"a": 1}, "json", str(bad))


def test_write_to_path(tmp_path):
    path = tmp_path / "r.json"
    data = emit_report({"a": 1.5}, "json", str(path))
    assert path.read_bytes() == data
