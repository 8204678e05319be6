import json
import subprocess
import sys

import pytest

import levelcross.cli as cli
from levelcross.cli import main
from levelcross.errors import NumericalError
from levelcross.io import read_csv, sha256_file


def _run(tmp_path, yaml_text, command, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml_text)
    out = tmp_path / "out"
    return main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra]), out


def test_levelmap_segment(tmp_path):
    rc, out = _run(tmp_path, "segment: {level_count: 20}\ntrajectory: {k0: [2], step_limit: 5}\n", "levelmap")
    assert rc == 0
    header, rows = read_csv(out / "levelmap.csv")
    assert header == ["k", "sigma1", "S1", "kbar", "sigma2_kbar"]
    assert [int(r[3]) for r in rows[:5]] == [3, 1, 7, 2, 11]
    _, traj = read_csv(out / "trajectory_k2.csv")
    assert [int(r[1]) for r in traj] == [2, 1, 3, 7, 15, 31]
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        assert sha256_file(out / name) == digest


def test_outputs_are_deterministic(tmp_path):
    text = "model: bernoulli\nseed: 3\nbernoulli: {k_start: 500, trials: 50, lln_seeds: 3, lln_periods: 20}\n"
    rc1, out1 = _run(tmp_path / "a", text, "montecarlo")
    rc2, out2 = _run(tmp_path / "b", text, "montecarlo")
    assert rc1 == rc2 == 0
    for name in ("montecarlo.csv", "lln_slopes.csv", "lln_returns.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_flag_changes_stream(tmp_path):
    text = "model: bernoulli\nbernoulli: {k_start: 500, trials: 30, lln_seeds: 2, lln_periods: 10}\n"
    _, o1 = _run(tmp_path / "a", text, "montecarlo", "--seed", "1")
    _, o2 = _run(tmp_path / "b", text, "montecarlo", "--seed", "2")
    assert read_csv(o1 / "montecarlo.csv")[1] != read_csv(o2 / "montecarlo.csv")[1]


def test_trajectory_user_spectra(tmp_path):
    (tmp_path / "s.txt").write_text("[tau1]\ncomplete yes\nG1 1\nG2 2\nG1 3\n[tau2]\ncomplete yes\nG2 0.5\nG1 1\nG1 2\n")
    rc, out = _run(tmp_path, "model: user-spectra\nuser_spectra: {path: s.txt}\ntrajectory: {k0: [1, 2]}\n",
                   "trajectory")
    assert rc == 0
    _, rows = read_csv(out / "trajectories.csv")
    assert {r[0]: r[1] for r in rows} == {"1": "loop", "2": "loop"}


def test_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, "model: bogus\n", "levelmap")[0] == 2
    assert _run(tmp_path, "segment: {a1: 2, a2: 2}\n", "levelmap")[0] == 2
    (tmp_path / "s.txt").write_text("[tau1]\nG1 1\nG2 1\n[tau2]\nG1 1\n")
    assert _run(tmp_path, "model: user-spectra\nuser_spectra: {path: s.txt}\n", "levelmap")[0] == 2
    assert _run(tmp_path, "model: tdse\n", "levelmap")[0] == 2
    assert _run(tmp_path, "model: spin\n", "validate-config")[0] == 0
    assert "config error" in capsys.readouterr().err


def test_truncation_exit_code(tmp_path):
    (tmp_path / "s.txt").write_text("[tau1]\ncomplete yes\nG1 1\nG1 3\n[tau2]\ncomplete yes\nG2 0.5\nG1 1\n")
    rc, _ = _run(tmp_path, "model: user-spectra\nuser_spectra: {path: s.txt}\n", "levelmap")
    assert rc == 0  # table simply stops at the first unresolved level
    text = ("model: bernoulli\nbernoulli: {beta: 0.5, gamma: 0.000001, k_start: 100000000, trials: 2, "
            "lln_seeds: 1, lln_periods: 1}\n")
    rc, _ = _run(tmp_path / "mc", text, "montecarlo")
    assert rc == 4


def test_tdse_identity_run(tmp_path, capsys):
    text = "model: tdse\ntdse: {identity: true, k0: 2, n_points: 150, levels: 5, epsilon: 0.5, a1: 2.0, energy_samples: 4}\n"
    cfg = tmp_path / "c.yaml"
    cfg.write_text(text)
    rc = main(["tdse", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    assert "observed=2" in capsys.readouterr().out
    _, rows = read_csv(tmp_path / "out" / "summary.csv")
    assert rows[0][1] == rows[0][2] == "2"
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["schedule"]["identity"] is True


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "levelcross", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "levelcross" in r.stdout


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(cfg, out, quiet=False):
        raise NumericalError("norm drifted")

    monkeypatch.setattr(cli, "cmd_tdse", boom)
    rc, _ = _run(tmp_path, "model: tdse\n", "tdse")
    assert rc == 3
