import json
import re
import subprocess
import sys

import pytest

from decrho.cli import EXIT_BUDGET, EXIT_IO, EXIT_OK, EXIT_PARSE, EXIT_USAGE, EXIT_VERIFY, main

FAST_PLAN = ["--iterations", "4", "--outer-iterations", "3"]


@pytest.fixture
def bench(tmp_path):
    assert main(["bench", "--out", str(tmp_path / "bench"), "--horizon", "2"]) == EXIT_OK
    return tmp_path / "bench"


def _value(text):
    return float(re.search(r"value (-?[\d.]+)", text).group(1))


def test_bench_writes_every_domain(bench, capsys):
    assert sorted(p.name for p in bench.iterdir()) == [
        "coupled-tag.dpomdp", "decoupled-chains.dpomdp", "single-tiger.dpomdp"]


def test_plan_writes_policy_and_report(bench, tmp_path, capsys):
    policy, report = tmp_path / "policy.json", tmp_path / "report.json"
    code = main(["plan", "--model", str(bench / "single-tiger.dpomdp"), "--K", "2", "--seed", "7",
                 "--policy-out", str(policy), "--report-out", str(report)] + FAST_PLAN)
    assert code == EXIT_OK
    doc = json.loads(report.read_text())
    best = [it["best_value"] for it in doc["iterations"]]
    assert all(b >= a for a, b in zip(best, best[1:]))
    assert doc["best"]["value"] == best[-1]
    assert json.loads(policy.read_text())["seed"] == 7
    assert "best value" in capsys.readouterr().out


def test_plan_without_adaptation(tmp_path):
    code = main(["plan", "--domain", "coupled-tag", "--no-adapt", "--policy-out", str(tmp_path / "p.json"),
                 "--report-out", str(tmp_path / "r.json")] + FAST_PLAN)
    assert code == EXIT_OK
    assert len(json.loads((tmp_path / "r.json").read_text())["iterations"]) == 3


def test_evaluate_modes_agree(tmp_path, capsys):
    policy = tmp_path / "p.json"
    main(["plan", "--domain", "coupled-tag", "--policy-out", str(policy),
          "--report-out", str(tmp_path / "r.json")] + FAST_PLAN)
    capsys.readouterr()
    values = {}
    for final in ("true", "rho", "plus"):
        assert main(["evaluate", "--domain", "coupled-tag", "--policy", str(policy), "--final", final]) == EXIT_OK
        values[final] = _value(capsys.readouterr().out)
    assert values["plus"] <= values["rho"] + 1e-9
    assert values["rho"] <= values["true"] + 1e-9
    assert main(["evaluate", "--domain", "coupled-tag", "--policy", str(policy), "--mode", "mc",
                 "--samples", "20000"]) == EXIT_OK
    out = capsys.readouterr().out
    mean, se = map(float, re.search(r"value (-?[\d.]+) \+- ([\d.]+)", out).groups())
    assert abs(mean - values["true"]) <= 4 * se


def test_convert_summary(capsys):
    assert main(["convert", "--domain", "coupled-tag", "--K", "2"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["horizon"] == 3 and summary["source_horizon"] == 2
    assert summary["joint_prediction_actions"] == 4
    assert summary["validation_problems"] == []


def test_brute_force_reports_both_optima(capsys):
    assert main(["brute-force", "--domain", "coupled-tag", "--horizon", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    rho = float(re.search(r"V\*\(centralized prediction reward\) = (-?[\d.]+)", out).group(1))
    plus = float(re.search(r"V\*\(converted model\) += (-?[\d.]+)", out).group(1))
    assert plus <= rho + 1e-9
    assert "converted optimum <= centralized optimum: yes" in out


def test_verify_gap_sign_suite(capsys):
    assert main(["verify", "--suite", "lemma3", "--instances", "200"]) == EXIT_OK
    out = capsys.readouterr().out
    gap = float(re.search(r"max observed negative gap: ([\d.e+-]+)", out).group(1))
    assert gap <= 1e-9


def test_failed_suite_exit_code(capsys):
    # the zero-loss suite fails on decoupled chains; the CLI must say so
    assert main(["verify", "--suite", "zero-loss"]) == EXIT_VERIFY
    assert "FAIL" in capsys.readouterr().out


def test_exit_codes(tmp_path, bench, capsys):
    assert main(["evaluate", "--domain", "coupled-tag", "--policy", str(tmp_path / "missing.json")]) == EXIT_IO
    bad = tmp_path / "bad.dpomdp"
    bad.write_text("# horizon: 1\nagents: 1\ndiscount: 0.5\n")
    assert main(["convert", "--model", str(bad)]) == EXIT_PARSE
    (tmp_path / "bad.json").write_text("{oops")
    assert main(["evaluate", "--domain", "coupled-tag", "--policy", str(tmp_path / "bad.json")]) == EXIT_PARSE
    assert main(["brute-force", "--domain", "coupled-tag", "--horizon", "3", "--budget", "100"]) == EXIT_BUDGET
    assert main(["plan"]) == EXIT_USAGE
    assert main(["convert", "--domain", "coupled-tag", "--K", "0"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "error:" in err


def test_policy_without_alpha_points_needs_true_final(tmp_path, capsys):
    doc = {"horizon": 2, "agents": [{"layers": [[{"action": 0, "edges": [0, 0]}], [{"action": 0, "edges": []}]]}]}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    assert main(["evaluate", "--domain", "single-tiger", "--policy", str(path), "--final", "rho"]) == EXIT_USAGE
    assert main(["evaluate", "--domain", "single-tiger", "--policy", str(path)]) == EXIT_OK


def test_help_and_console_script():
    assert main(["--help"]) == EXIT_OK
    proc = subprocess.run([sys.executable, "-m", "decrho.cli", "bench", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "--horizon" in proc.stdout
