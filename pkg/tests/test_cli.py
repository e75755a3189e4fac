"""CLI workflows: simulate, tune, calibrate, replay, exit codes, determinism."""

import json
from pathlib import Path

import pytest

from crosswalk.cli import main

DATA = Path(__file__).resolve().parent.parent / "src/crosswalk/data"
SCENARIOS = DATA / "scenarios"
CALIBRATION = DATA / "calibration"


def test_simulate_scenario1_summary(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(SCENARIOS / "scenario1.cfg"),
                 "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["crossing_order"] == "pedestrian_first"
    assert summary["outcome"] == "completed"
    assert (out / "trace.csv").exists()
    assert (out / "trace.jsonl").exists()


def test_simulate_scenario2_vehicle_first(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(SCENARIOS / "scenario2.cfg"),
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["crossing_order"] == "vehicle_first"


def test_simulate_deadlock_probe_exit_codes(tmp_path):
    ok = main(["simulate", "--config", str(SCENARIOS / "deadlock_probe.cfg"),
               "--out", str(tmp_path / "a")])
    assert ok == 0
    stuck = main(["simulate", "--config", str(SCENARIOS / "deadlock_probe.cfg"),
                  "--out", str(tmp_path / "b"), "--set", "decision.k_disc=0"])
    assert stuck == 2
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["outcome"] == "timeout"


def test_simulate_bad_config_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[vehicle]\nd0 = -5\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_simulate_byte_identical_outputs(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["simulate", "--config", str(SCENARIOS / "scenario1.cfg"),
                     "--out", str(out), "--seed", "7"]) == 0
    assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()
    assert (out_a / "summary.json").read_bytes() == (out_b / "summary.json").read_bytes()


def test_tune_smoke_writes_params_and_histories(tmp_path):
    out = tmp_path / "tune"
    code = main(["tune", "--out", str(out), "--iterations", "3", "--swarm", "4",
                 "--seed", "3", "--jobs", "1"])
    assert code == 0
    for kind in ("sfm", "mdp"):
        params = (out / f"params_{kind}.cfg").read_text()
        assert "[decision]" in params
        history = (out / f"history_{kind}.csv").read_text().splitlines()[1:]
        costs = [float(line.split(",")[1]) for line in history]
        assert costs == sorted(costs, reverse=True) or all(
            b <= a for a, b in zip(costs, costs[1:]))
    report = json.loads((out / "tuning_report.json").read_text())
    assert "comparison" in report
    for kind in ("sfm", "mdp"):
        assert (report["models"][kind]["best_cost"]
                <= report["models"][kind]["baseline_cost"] + 1e-9)


def test_tune_params_file_loads_back(tmp_path):
    out = tmp_path / "tune"
    assert main(["tune", "--out", str(out), "--iterations", "2", "--swarm", "3",
                 "--seed", "1", "--model", "sfm", "--jobs", "1"]) == 0
    sim_out = tmp_path / "sim"
    assert main(["simulate", "--config", str(SCENARIOS / "scenario1.cfg"),
                 "--params", str(out / "params_sfm.cfg"),
                 "--out", str(sim_out)]) == 0


def test_tune_inverted_bounds_exit_1(tmp_path, capsys):
    cfg = tmp_path / "tuning.cfg"
    cfg.write_text("[bounds]\nk_disc = 2.0 0.5\n")
    assert main(["tune", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--iterations", "1", "--swarm", "2"]) == 1
    assert "error:" in capsys.readouterr().err


def test_tune_deterministic_outputs(tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["tune", "--out", str(out), "--iterations", "2",
                     "--swarm", "3", "--seed", "11", "--model", "sfm",
                     "--jobs", "1"]) == 0
        outs.append(out)
    assert ((outs[0] / "params_sfm.cfg").read_bytes()
            == (outs[1] / "params_sfm.cfg").read_bytes())
    assert ((outs[0] / "history_sfm.csv").read_bytes()
            == (outs[1] / "history_sfm.csv").read_bytes())


@pytest.mark.parametrize("kind,ref", [("sfm", "ref_sfm.csv"), ("mdp", "ref_mdp.csv")])
def test_calibrate_shipped_references(tmp_path, kind, ref):
    out = tmp_path / "cal"
    assert main(["calibrate", "--data", str(CALIBRATION / ref),
                 "--model", kind, "--out", str(out)]) == 0
    report = json.loads((out / f"rss_report_{kind}.json").read_text())
    assert report["rss_per_sample"] < 1e-6
    assert (out / f"fitted_{kind}.cfg").exists()


def test_calibrate_empty_csv_exit_1(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("traj_id,t,d_ped,v_ped,label\n")
    assert main(["calibrate", "--data", str(empty), "--model", "sfm",
                 "--out", str(tmp_path / "o")]) == 1
    assert "error:" in capsys.readouterr().err


def test_replay_echoes_every_tick(tmp_path, capsys):
    out = tmp_path / "out"
    main(["simulate", "--config", str(SCENARIOS / "scenario1.cfg"),
          "--out", str(out)])
    capsys.readouterr()
    ticks = (out / "trace.csv").read_text().count("\n") - 1
    assert main(["replay", "--trace", str(out / "trace.csv")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == ticks
    first = json.loads(lines[0])
    assert first["type"] == "state"
    assert {"t", "veh", "ped", "mode", "flags"} <= set(first)


def test_replay_missing_file_exit_1(tmp_path, capsys):
    assert main(["replay", "--trace", str(tmp_path / "nope.csv")]) == 1
    assert "error:" in capsys.readouterr().err


def test_console_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "crosswalk.cli", "simulate",
                           "--config", str(SCENARIOS / "scenario2.cfg"),
                           "--out", "/tmp/crosswalk_cli_test"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "vehicle_first" in proc.stdout
