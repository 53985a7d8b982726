import csv
import json
import subprocess
import sys

import pytest

from ambuloc.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, main
from ambuloc.instance import load_instance, make_instance, save_instance

from families import random_instance
from oracles import mask_oracle


@pytest.fixture
def tiny(tmp_path):
    inst = random_instance(11, max_sites=5)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    return inst, path


def test_generate_is_deterministic(tmp_path):
    args = ["generate", "--points", "12", "--sites", "9", "--periods", "3", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "instance.json").read_bytes()
    assert a == (tmp_path / "b" / "instance.json").read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    ma.pop("wall_time_s"), mb.pop("wall_time_s")
    ma.pop("command_line"), mb.pop("command_line")
    assert ma == mb
    assert set(ma) == {"config_hash", "instance_fingerprint", "seed", "tool_version"}
    assert load_instance(tmp_path / "a" / "instance.json").n_sites == 9


def test_generate_config_dir(tmp_path, monkeypatch):
    cfg_dir = tmp_path / "cfg"
    cfg_dir.mkdir()
    (cfg_dir / "small.json").write_text(json.dumps({"num_demand_points": 5, "num_sites": 4, "num_periods": 2}))
    monkeypatch.setenv("AMBULOC_CONFIG_DIR", str(cfg_dir))
    monkeypatch.chdir(tmp_path)
    assert main(["generate", "--config", "small.json", "--out", "o", "--quiet"]) == EXIT_OK
    assert load_instance(tmp_path / "o" / "instance.json").n_points == 5
    assert main(["generate", "--config", "missing.json", "--out", "o"]) == EXIT_INPUT


@pytest.mark.parametrize("kind", ["deterministic", "probabilistic"])
def test_solve_matches_oracle(tmp_path, tiny, kind):
    inst, path = tiny
    out = tmp_path / "run"
    assert main(["solve", str(path), "--model", kind, "--epsilon", "2", "--out", str(out)]) == EXIT_OK
    plan = json.loads((out / "plan.json").read_text())
    assert len(plan["opened_sites"]) <= 2
    report = (out / "report.txt").read_text()
    expected = mask_oracle(inst, kind, epsilon=2)
    assert f"({expected})" in report
    assert (out / "manifest.json").exists()


def test_solve_epsilon_zero(tmp_path, tiny):
    _, path = tiny
    out = tmp_path / "z"
    assert main(["solve", str(path), "--epsilon", "0", "--out", str(out)]) == EXIT_OK
    assert "objective: 0.000000 (0)" in (out / "report.txt").read_text()


def test_missing_instance(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == EXIT_INPUT


def test_bad_arguments(tmp_path, tiny):
    _, path = tiny
    assert main(["solve", str(path), "--model", "fuzzy", "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["solve", str(path), "--epsilon", "-1", "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["sweep", str(path), "--eps-min", "4", "--eps-max", "2", "--out", str(tmp_path)]) == EXIT_INPUT


def test_quiet_prints_only_paths(tmp_path, tiny, capsys):
    _, path = tiny
    out = tmp_path / "q"
    assert main(["solve", str(path), "--quiet", "--out", str(out)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == [str(out / "plan.json"), str(out / "report.txt")]


def test_sweep_outputs(tmp_path, tiny):
    inst, path = tiny
    out = tmp_path / "s"
    code = main(["sweep", str(path), "--eps-min", "0", "--eps-max", str(inst.n_sites), "--out", str(out)])
    assert code == EXIT_OK
    with open(out / "front.csv") as f:
        rows = list(csv.reader(f))
    labels = [t.label for t in inst.ambulance_types]
    assert rows[0] == ["epsilon", "stations_used", "objective", "coverage_rate_total"] + [
        f"coverage_rate_{x}" for x in labels
    ] + ["status"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["monotonicity_violations"] == []
    assert summary["failed_epsilons"] == []
    assert len(list((out / "plans").iterdir())) == inst.n_sites + 1
    best = max(float(r[2]) for r in rows[1:])
    assert best == pytest.approx(float(mask_oracle(inst, "deterministic")))


def test_scenario_with_empty_baseline(tmp_path, tiny):
    _, path = tiny
    base = tmp_path / "base.json"
    base.write_text(json.dumps({"opened_sites": [], "allocations": []}))
    out = tmp_path / "sc"
    code = main(["scenario", str(path), "--baseline", str(base), "--scenarios", "S1,S5", "--out", str(out)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(out / "scenarios.csv")))
    s1 = [r for r in rows if r["scenario"] == "S1"]
    assert len(s1) == 2 and all(r["total_rate_pct"] == "0.00" for r in s1)
    assert (out / "comparison.md").read_text().startswith("| comparison |")


def test_scenario_needs_baseline(tmp_path, tiny):
    _, path = tiny
    assert main(["scenario", str(path), "--scenarios", "S1", "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["scenario", str(path), "--scenarios", "S9", "--out", str(tmp_path)]) == EXIT_INPUT


def test_export_and_import(tmp_path):
    inst = make_instance(types=[("A", 1, 10)], demand=[[[5]]], capacities=[1], travel_time=[[4]])
    path = tmp_path / "i.json"
    save_instance(inst, path)
    out = tmp_path / "e"
    assert main(["export-mps", str(path), "--out", str(out)]) == EXIT_OK
    assert "ENDATA" in (out / "model.mps").read_text()
    sol = tmp_path / "sol.txt"
    sol.write_text("z_0 1\nx_0_0_0 1\ny_0_0_0 1\n")
    assert main(["import-solution", str(path), str(sol), "--out", str(tmp_path / "ok")]) == EXIT_OK
    assert "objective: 5.000000" in (tmp_path / "ok" / "report.txt").read_text()
    sol.write_text("z_0 0\nx_0_0_0 1\n")
    assert main(["import-solution", str(path), str(sol), "--out", str(tmp_path / "bad")]) == EXIT_INFEASIBLE
    sol.write_text("z_0 maybe\n")
    assert main(["import-solution", str(path), str(sol), "--out", str(tmp_path / "bad")]) == EXIT_INPUT


def test_solve_export_method(tmp_path, tiny):
    _, path = tiny
    out = tmp_path / "x"
    assert main(["solve", str(path), "--method", "export", "--model", "prob", "--dump-reliability", "--out", str(out)]) == 0
    assert (out / "model.mps").exists() and (out / "reliability.csv").exists()


def test_console_entry_point(tmp_path, tiny):
    _, path = tiny
    proc = subprocess.run(
        [sys.executable, "-m", "ambuloc.cli", "solve", str(path), "--quiet", "--out", str(tmp_path / "m")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("report.txt")
