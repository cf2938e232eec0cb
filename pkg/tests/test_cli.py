"""End-to-end CLI runs against the in-process service."""
import filecmp

import pytest

from vscstab.cli import main


def test_no_command_is_usage_error(capsys):
    assert main([]) == 64
    assert "usage" in capsys.readouterr().err


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 64
    err = capsys.readouterr().err
    assert "invalid choice" in err


def test_unknown_override_key(capsys):
    assert main(["bode", "--set", "circuit.nope=1"]) == 64
    assert "nope" in capsys.readouterr().err


def test_missing_config_file(capsys, tmp_path):
    assert main(["bode", "--config", str(tmp_path / "absent.cfg")]) == 64
    assert "cannot read config" in capsys.readouterr().err


def test_bad_config_file(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("circuit.scr = 4\ngrid.scr = 4\n")
    assert main(["bode", "--config", str(cfg)]) == 64
    err = capsys.readouterr().err
    assert "line 2" in err and "grid" in err


def test_bode_writes_tables(capsys, tmp_path):
    out = tmp_path / "run"
    assert main(["bode", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum(1 for ln in lines
               if ln.startswith("wrote ") and ln.endswith(".csv")) == 4
    assert lines[-1] == "wrote 4 response tables"
    files = sorted(p.name for p in out.iterdir())
    assert files == ["bode_accurate_negative.csv",
                     "bode_accurate_positive.csv",
                     "bode_reduced_negative.csv",
                     "bode_reduced_positive.csv"]


def test_bode_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bode", "--out", str(a)]) == 0
    assert main(["bode", "--out", str(b)]) == 0
    for p in a.iterdir():
        assert filecmp.cmp(p, b / p.name, shallow=False)


def test_config_file_controls_grid_size(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("# coarse response grid\nanalysis.bode_n = 10\n")
    out = tmp_path / "run"
    assert main(["bode", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "bode_accurate_positive.csv").read_text().splitlines()
    assert len(rows) == 11


def test_nyquist_unstable_exit_code(capsys, tmp_path):
    rc = main(["nyquist", "--set", "control.pll_bw_hz=100",
               "--out", str(tmp_path)])
    assert rc == 2
    out = capsys.readouterr().out
    assert "NC accurate: unstable" in out
    assert "GNC mimo: unstable" in out
    assert "NC reduced: stable" in out
    assert (tmp_path / "verdicts.csv").exists()
    assert (tmp_path / "nyquist_mimo_lambda_2.csv").exists()


def test_marginal_summary(capsys, tmp_path):
    rc = main(["marginal", "--set", "analysis.marginal_tol_hz=0.5",
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "marginal PLL bandwidth:" in out
    assert "resonance at" in out


def test_verify_reports_all_checks(capsys, tmp_path):
    rc = main(["verify", "--out", str(tmp_path)])
    assert rc == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines()
             if not ln.startswith("wrote ")]
    assert lines and all(ln.startswith("pass") for ln in lines)


def test_simulate_hold(capsys, tmp_path):
    rc = main(["simulate", "--set", "sim.duration_s=1",
               "--set", "output.spectrum_window_s=0.5",
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "scenario hold: bounded" in out
    assert (tmp_path / "timeseries.csv").exists()
    assert (tmp_path / "spectrum.csv").exists()


@pytest.mark.parametrize("argv", [
    ["bode", "--set", "pll_bw_hz=100"],      # no section
    ["bode", "--set", "control.pll_bw_hz"],  # no value
])
def test_malformed_override(capsys, argv):
    assert main(argv) == 64
    assert capsys.readouterr().err
