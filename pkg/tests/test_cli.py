import numpy as np

from schoolsim.cli import cli


def test_scenarios_lists_builtins(capsys):
    assert cli(["scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("schooling-2d", "schooling-3d", "collision-1d", "collision-2d"):
        assert name in out
    assert "sweep sigma in {0, 0.15, 5}" in out


def test_simulate_named_scenario_with_overrides(tmp_path, capsys):
    code = cli(["simulate", "collision-1d", "--seed", "3", "--t-end", "0.2",
                "--out-dir", str(tmp_path), "--set", "sigma=0.15"])
    assert code == 0
    out = capsys.readouterr().out
    assert "termination=completed" in out
    run_dir = tmp_path / "collision-1d" / "seed00003"
    assert (run_dir / "trajectory.csv").exists()
    assert (run_dir / "diagnostics.csv").exists()
    assert list(run_dir.glob("*.png"))
    assert (tmp_path / "collision-1d" / "summary.csv").exists()


def test_simulate_replicates_reports_fractions(tmp_path, capsys):
    code = cli(["simulate", "collision-1d", "--t-end", "0.1", "--replicates", "3",
                "--out-dir", str(tmp_path), "--no-figures", "--set", "sigma=5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "collided=" in out
    summary = (tmp_path / "collision-1d" / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("seed,termination,classification")
    assert len(summary) == 4


def test_simulate_rerun_is_byte_identical(tmp_path):
    args = ["simulate", "collision-1d", "--seed", "5", "--t-end", "0.2",
            "--set", "sigma=5", "--no-figures"]
    assert cli(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert cli(args + ["--out-dir", str(tmp_path / "b")]) == 0
    fa = (tmp_path / "a" / "collision-1d" / "seed00005" / "trajectory.csv").read_bytes()
    fb = (tmp_path / "b" / "collision-1d" / "seed00005" / "trajectory.csv").read_bytes()
    assert fa == fb


def test_simulate_from_config_file(tmp_path, capsys):
    from schoolsim import apply_overrides, get_scenario, save_scenario

    spec = apply_overrides(get_scenario("collision-1d"), {"t_end": 0.1})
    cfg = tmp_path / "my.yaml"
    save_scenario(spec, cfg)
    code = cli(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "out"),
                "--no-figures"])
    assert code == 0
    assert (tmp_path / "out" / "collision-1d" / "seed00000" / "trajectory.csv").exists()


def test_out_dir_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SCHOOLSIM_OUT_DIR", str(tmp_path / "envout"))
    code = cli(["simulate", "collision-1d", "--t-end", "0.05", "--no-figures"])
    assert code == 0
    assert (tmp_path / "envout" / "collision-1d" / "seed00000" / "trajectory.csv").exists()


def test_unknown_scenario_fails_with_code_1(capsys):
    assert cli(["simulate", "no-such-scenario"]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_flag_fails_with_code_1(capsys):
    assert cli(["simulate", "collision-1d", "--frobnicate"]) == 1


def test_missing_scenario_and_config_fails(capsys):
    assert cli(["simulate"]) == 1


def test_bad_override_fails_with_code_1(capsys):
    assert cli(["simulate", "collision-1d", "--set", "warp.factor=9"]) == 1
    assert cli(["simulate", "collision-1d", "--set", "nonsense"]) == 1


def test_io_failure_exits_2(tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("not a directory")
    code = cli(["simulate", "collision-1d", "--t-end", "0.05", "--no-figures",
                "--out-dir", str(blocker)])
    assert code == 2
    assert "i/o error" in capsys.readouterr().err


def test_sweep_uses_declared_axis(tmp_path, capsys):
    code = cli(["sweep", "collision-1d", "--replicates", "2", "--seed", "1",
                "--out-dir", str(tmp_path), "--set", "t_end=0.1",
                "--values", "0,5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "collided" in out
    table = (tmp_path / "collision-1d" / "sweep.csv").read_text().splitlines()
    assert table[0] == "sigma,n,schooled_fraction,collided_fraction,exploded_fraction,undecided_fraction"
    assert len(table) == 3
    for line in table[1:]:
        cells = line.split(",")
        assert int(cells[1]) == 2
        assert sum(float(c) for c in cells[2:]) == 1.0


def test_sweep_without_axis_fails(capsys):
    assert cli(["sweep", "schooling-2d", "--replicates", "1"]) == 1


def test_verify_exits_zero(capsys):
    assert cli(["verify"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out
