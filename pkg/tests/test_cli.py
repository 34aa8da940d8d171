import json
import math

import pytest

from leakfree.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def test_synth_x(tmp_path, capsys):
    assert run(tmp_path, "synth", "x", "--g", "3.0", "--delta", "0.35", "--theta", "1.5708") == 0
    doc = json.loads((tmp_path / "circuit_x.json").read_text())
    assert len(doc["steps"]) == 3
    assert "theta_eff_rad" in capsys.readouterr().out


def test_synth_z(tmp_path):
    assert run(tmp_path, "synth", "z", "--eps-q", "1.0", "--delta", "0.35", "--phi", "3.1416") == 0
    assert len(json.loads((tmp_path / "circuit_z.json").read_text())["steps"]) == 2


def test_synth_x_without_noise(tmp_path, capsys):
    assert run(tmp_path, "synth", "x", "--g", "3.0", "--delta", "0", "--theta", "1.0") == 0
    doc = json.loads((tmp_path / "circuit_x.json").read_text())
    assert doc["metadata"]["theta_eff_rad"] == pytest.approx(1.0)


def test_synth_zxz(tmp_path):
    assert run(tmp_path, "synth", "zxz", "--zxz-angles-rad", "0.3", "1.1", "-0.7") == 0


def test_solver_error_exit_code(tmp_path, capsys):
    assert run(tmp_path, "synth", "z", "--zeta", "1.5") == 2
    assert "ZetaNotOne" in capsys.readouterr().err
    assert run(tmp_path, "synth", "x", "--g", "0") == 2
    assert "ZeroCoupling" in capsys.readouterr().err


def test_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "synth", "y")
    assert exc.value.code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"g_ghz": 2.0, "theta_rad": 0.5, "delta_eps_d_ghz": 0.0}))
    out = tmp_path / "o"
    assert main(["synth", "x", "--config", str(cfg), "--theta", "0.25", "--out-dir", str(out)]) == 0
    doc = json.loads((out / "circuit_x.json").read_text())
    assert doc["metadata"]["theta_eff_rad"] == pytest.approx(0.25)
    assert doc["steps"][1]["amplitude_ghz"] == 2.0


def test_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["estimate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    cfg.write_text("{not json")
    assert main(["estimate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_simulate_constant_single_channel(tmp_path):
    assert run(tmp_path, "simulate", "--noise", "constant", "--delta", "0.35") == 0
    lines = (tmp_path / "constant_uix.csv").read_text().splitlines()
    assert lines[0] == "t_ns,abs_rho23,rho11,rho22,rho33"
    assert float(lines[-1].split(",")[1]) <= 1e-10
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"config", "seed", "rng_algorithm", "version"} <= set(manifest)


def test_simulate_small_ensemble_is_deterministic(tmp_path):
    args = ["simulate", "--channels", "10", "--dt-out-ns", "0.01", "--seed", "4"]
    assert main([*args, "--out-dir", str(tmp_path / "a")]) == 0
    assert main([*args, "--out-dir", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert names == ["piecewise_uix.csv", "piecewise_zxz.csv", "quasistatic_uix.csv", "quasistatic_zxz.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_single_kind(tmp_path):
    assert run(tmp_path, "simulate", "--noise", "quasistatic", "--circuit", "bare", "--channels", "5") == 0
    assert (tmp_path / "quasistatic_bare.csv").exists()


def test_estimate_summary_within_confidence(tmp_path, capsys):
    assert run(tmp_path, "estimate", "--delta", "0.35", "--shots", "100000", "--repetitions", "5") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert abs(summary["mean_delta_hat_ghz"] - 0.35) <= summary["mean_halfwidth_ghz"]


def test_estimate_zero_noise_pinned(tmp_path, capsys):
    assert run(tmp_path, "estimate", "--delta", "0", "--repetitions", "2") == 0
    assert "pinned" in capsys.readouterr().out
    assert json.loads((tmp_path / "summary.json").read_text())["pinned_reps"] == [0, 1]


def test_verify_default_passes(tmp_path):
    assert run(tmp_path, "verify") == 0
    assert json.loads((tmp_path / "verify_report.json").read_text())["passed"]


def test_verify_failures(tmp_path, capsys):
    assert run(tmp_path, "verify", "--zeta", "1.5", "--suites", "z_synthesis") == 1
    assert "ZetaNotOne" in capsys.readouterr().out
    assert run(tmp_path, "verify", "--tol", "1e-16") == 1
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["failed"]


def test_outputs_stay_in_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "only_here"
    assert main(["synth", "x", "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["only_here"]
