import json
import subprocess
import sys

import pytest

from mallowslab.cli import main

UNIF = "uniform(a=0,b=1)"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_distance_sample_file(capsys, tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("0.5\n", encoding="utf-8")
    code, out, _ = run(capsys, "distance", "--lhs", f"@{path}", "--rhs", UNIF, "--r", "2")
    assert code == 0
    rec = json.loads(out)
    assert list(rec) == ["value", "value_pow", "method", "error"]
    assert rec["value_pow"] == pytest.approx(1 / 12, rel=1e-14)


def test_distance_two_models(capsys):
    code, out, _ = run(capsys, "distance", "--lhs", "normal(mu=0,sigma=1)", "--rhs", "normal(mu=0,sigma=2)")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.0, rel=1e-9)


def test_distance_exit_codes(capsys, tmp_path):
    assert run(capsys, "distance", "--lhs", "nosuch(a=1)", "--rhs", UNIF)[0] == 2
    assert run(capsys, "distance", "--lhs", f"@{tmp_path / 'none.txt'}", "--rhs", UNIF)[0] == 2
    assert run(capsys, "distance", "--lhs", "@/dev/null", "--rhs", UNIF)[0] == 2  # empty sample
    (tmp_path / "x.txt").write_text("2\n", encoding="utf-8")
    code, _, err = run(capsys, "distance", "--lhs", f"@{tmp_path / 'x.txt'}", "--rhs", "pareto(alpha=1.5,xm=1)")
    assert code == 3 and "infinite" in err


def test_limit_json_and_csv(capsys):
    code, out, _ = run(capsys, "limit", "--model", UNIF, "--reps", "200", "--seed", "3", "--grid", "513")
    assert code == 0
    summary = json.loads(out)
    assert summary["reps"] == 200 and summary["kind"] == "continuous"
    code, out, _ = run(capsys, "limit", "--model", "bernoulli(p=0.5)", "--reps", "50", "--format", "csv")
    assert code == 0
    vals = [float(v) for v in out.split()]
    assert len(vals) == 50 and min(vals) >= 0


def test_limit_refusal(capsys):
    code, _, err = run(capsys, "limit", "--model", "normal(mu=0,sigma=1)", "--reps", "10")
    assert code == 3 and "Condition 2" in err


def test_hazard_report(capsys):
    code, out, _ = run(capsys, "hazard", "--model", "exponential(rate=1)")
    assert code == 0
    rep = json.loads(out)
    assert rep["condition2"]["verdict"] == "divergent"
    assert rep["hazard_divergence"]["verdict"] == "finite"
    assert rep["mgf_radius"] == pytest.approx(1.0, rel=1e-9)
    assert all(row["satisfied"] for row in rep["sandwich"])
    assert len(rep["profile"]) == 17


def test_hazard_rejects_step_model(capsys):
    assert run(capsys, "hazard", "--model", "bernoulli(p=0.5)")[0] == 2


def test_bootstrap_record(capsys):
    code, out, _ = run(capsys, "bootstrap", "--model", UNIF, "--n", "5", "--gap-draws", "2000", "--exact")
    assert code == 0
    rec = json.loads(out)
    assert list(rec) == ["upper", "lower", "gap", "mc_error", "identity_check"]
    assert rec["identity_check"]["satisfied"] is True


def test_bootstrap_trials_summary(capsys):
    code, out, _ = run(capsys, "bootstrap", "--model", UNIF, "--n", "30", "--reps", "3", "--gap-draws", "500")
    assert code == 0
    rec = json.loads(out)
    assert len(rec["trials"]) == 3 and rec["summary"]["trials"] == 3


def test_bootstrap_exact_cap(capsys):
    assert run(capsys, "bootstrap", "--model", UNIF, "--n", "9", "--exact")[0] == 3


def test_study_from_config(capsys, tmp_path):
    cfg = tmp_path / "study.cfg"
    out_path = tmp_path / "report.csv"
    cfg.write_text(
        f"model = {UNIF}\nn_grid = 32,64,128\nreps = 100\nformat = csv\nout = {out_path}\nlimit_reps = 200\n",
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "study", "--config", str(cfg))
    assert code == 0 and out == ""
    assert len(out_path.read_text().strip().split("\n")) == 4


def test_study_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text(f"model = {UNIF}\nn_grid = 32,64,128\nreps = 100\nlimit_reps = 200\n", encoding="utf-8")
    code, out, _ = run(capsys, "study", "--config", str(cfg), "--threads", "2", "--seed", "9")
    assert code == 0
    assert json.loads(out)["config"]["seed"] == 9


def test_study_thread_count_does_not_change_output(capsys):
    args = ["study", "--model", UNIF, "--n-grid", "32,64,128", "--reps", "100", "--limit-reps", "200"]
    a = run(capsys, *args, "--threads", "1")[1]
    b = run(capsys, *args, "--threads", "4")[1]
    assert a == b


@pytest.mark.parametrize(
    "extra",
    [["--reps", "10"], ["--n-grid", "64,32,128"], ["--format", "xml"], ["--alpha", "2"]],
)
def test_study_config_errors(capsys, extra):
    code, _, err = run(capsys, "study", "--model", UNIF, "--n-grid", "32,64,128", *extra)
    assert code == 2 and err.startswith("error:")


def test_study_missing_config_file(capsys, tmp_path):
    assert run(capsys, "study", "--config", str(tmp_path / "none.cfg"))[0] == 2


def test_study_refusal(capsys):
    code, _, _ = run(capsys, "study", "--model", "pareto(alpha=1.5,xm=1)", "--n-grid", "32,64,128", "--reps", "100")
    assert code == 3


def test_study_unwritable_output(capsys, tmp_path):
    bad = tmp_path / "missing" / "r.json"
    code, _, err = run(
        capsys, "study", "--model", UNIF, "--n-grid", "32,64,128", "--reps", "100", "--limit-reps", "50", "--out", str(bad)
    )
    assert code == 2 and str(bad) in err


def test_study_help_documents_every_key():
    out = subprocess.run(
        [sys.executable, "-m", "mallowslab", "study", "--help"], capture_output=True, text=True, check=True
    ).stdout
    for key in ("model", "r", "n_grid", "reps", "seed", "alpha", "grid_size", "out", "format", "threads"):
        assert key in out


def test_console_entry_point_argparse_error():
    proc = subprocess.run([sys.executable, "-m", "mallowslab", "distance"], capture_output=True, text=True)
    assert proc.returncode == 2
