import json

import pytest

from rholab import acceptance
from rholab.cli import run
from rholab.records import read_jsonl


def test_simulate_writes_records_and_summary(tmp_path, capsys):
    out = tmp_path / "runs" / "t.jsonl"
    assert run(["simulate", "--m", "1000", "--k", "2", "--trials", "300", "--seed", "7",
                "--out", str(out), "--workers", "1", "--csv"]) == 0
    rows = read_jsonl(out)
    assert len(rows) == 300
    assert list(rows[0]) == ["trial", "mu", "tau", "period"]
    assert [r["trial"] for r in rows] == list(range(300))
    assert all(r["period"] == r["tau"] - r["mu"] for r in rows)
    summary = json.loads((tmp_path / "runs" / "t.summary.json").read_text())
    assert summary["version"] and summary["config"]["m"] == 1000 and summary["config"]["seed"] == 7
    assert summary["summary"]["n"] == 300
    assert (tmp_path / "runs" / "t.csv").read_text().splitlines()[0] == "trial,mu,tau,period"


def test_simulate_is_byte_reproducible(tmp_path):
    paths = []
    for name, workers in (("a", "1"), ("b", "2")):
        p = tmp_path / f"{name}.jsonl"
        assert run(["simulate", "--m", "100", "--trials", "500", "--seed", "3",
                    "--out", str(p), "--workers", workers]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_hazard_records_have_hazard_fields(tmp_path):
    out = tmp_path / "h.jsonl"
    assert run(["hazard", "--m", "10", "--trials", "50", "--out", str(out), "--workers", "1"]) == 0
    row = read_jsonl(out)[0]
    assert list(row) == ["trial", "mu", "tau", "period", "h_total", "H_final"]


def test_hazard_rejects_k3(tmp_path):
    assert run(["hazard", "--m", "10", "--k", "3", "--trials", "5", "--out", str(tmp_path / "h.jsonl")]) == 2


def test_theory_prints_bounds(capsys):
    assert run(["theory", "--m", "10", "--k", "2", "--x", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:2] == ["N=14", "lambda=0.91"]
    assert out[2] == "b1=2.0384" and out[3] == "b2=7.8624"


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("RHO_LAB_OUT", str(tmp_path / "envdir"))
    assert run(["poisson", "--m", "30", "--x", "0.5", "--trials", "10000", "--workers", "1"]) == 0
    rows = read_jsonl(tmp_path / "envdir" / "poisson.jsonl")
    assert len(rows) == 10000 and list(rows[0]) == ["trial", "z"]
    assert (tmp_path / "envdir" / "poisson.summary.json").exists()


def test_exhaustive_and_oracle(tmp_path):
    assert run(["exhaustive", "--m", "10", "--k", "2", "--maps", "5", "--workers", "1",
                "--out", str(tmp_path / "e.jsonl")]) == 0
    assert len(read_jsonl(tmp_path / "e.jsonl")) == 5
    assert run(["oracle", "--m", "2", "--k", "2", "--sequences", "--out", str(tmp_path / "o.json")]) == 0
    doc = json.loads((tmp_path / "o.json").read_text())
    assert doc["sequence_oracle_agrees"] is True
    assert doc["exact"]["P_no_seed_period1"] == "1/4"


@pytest.mark.parametrize("argv", [["bogus"], ["simulate", "--m", "10", "--nope"], ["simulate"],
                                  ["simulate", "--m", "0", "--trials", "3"],
                                  ["report", "--threshold", "c99.x=1"]])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.setenv("RHO_LAB_OUT", str(tmp_path))
    assert run(argv) == 2


def test_capacity_error_exit_3(tmp_path):
    assert run(["oracle", "--m", "4", "--k", "2", "--out", str(tmp_path / "o.json")]) == 3
    assert run(["exhaustive", "--m", "100000", "--k", "2", "--maps", "1", "--out", str(tmp_path / "e.jsonl")]) == 3


def test_report_missing_inputs_exit_2(tmp_path, capsys):
    assert run(["report", "--run-dir", str(tmp_path / "nothing"), "--no-execute"]) == 2
    assert "nothing" in capsys.readouterr().err


def test_report_from_existing_run(acceptance_run, capsys):
    run_dir, _, _ = acceptance_run
    assert run(["report", "--run-dir", str(run_dir), "--no-execute"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("[PASS]") == len(acceptance.evaluate(*acceptance.load_metrics(run_dir)))
    report = json.loads((run_dir / "report.json").read_text())
    assert report["passed"] is True and report["version"]
    assert all(c["tag"] for c in report["checks"])


def test_report_threshold_override_flips_to_fail(acceptance_run, capsys):
    run_dir, _, _ = acceptance_run
    assert run(["report", "--run-dir", str(run_dir), "--no-execute", "--threshold", "c1.ks_D=1e-6"]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] C1" in out


def test_report_corrupted_summary_exit_2(acceptance_run, tmp_path, capsys):
    import shutil

    run_dir, _, _ = acceptance_run
    copy = tmp_path / "copy"
    shutil.copytree(run_dir, copy, ignore=shutil.ignore_patterns("*.jsonl", "_rerun"))
    (copy / "k2" / "summary.json").write_text("{not json")
    assert run(["report", "--run-dir", str(copy), "--no-execute"]) == 2
    assert str(copy / "k2" / "summary.json") in capsys.readouterr().err
