import csv
import json
from pathlib import Path

import pytest

from qsatlink.channel import ingest_loss_csv
from qsatlink.cli import main

SHORT = "orbit.theta_min_deg = 70\nchannel.zenith_loss_db = 30.845\n"


@pytest.fixture
def short_config(tmp_path):
    p = tmp_path / "short.conf"
    p.write_text(SHORT)
    return p


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    return main([*argv, "--out", str(out)]), out


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_pass_outputs(tmp_path, short_config):
    code, out = _run(tmp_path, "a", "simulate-pass", "--config", str(short_config))
    assert code == 0
    for name in ("qkd_pass.csv", "qkpc_pass.csv", "loss_profile.csv", "summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text())
    rows = _read_csv(out / "qkd_pass.csv")
    assert summary["total_skl_bits"] == sum(int(r["skl_bits"]) for r in rows)
    assert summary["peak_skr_hz"] == max(float(r["skr_hz"]) for r in rows)
    assert summary["qkd_window_s"] == sum(int(r["skl_bits"]) > 0 for r in rows)
    assert summary["pass_duration_s"] == len(rows)
    private = sum(float(r["qkpc_rate_bps"]) for r in _read_csv(out / "qkpc_pass.csv"))
    assert summary["total_private_bits"] == pytest.approx(private, rel=1e-12)
    assert summary["zenith_loss_db"] == pytest.approx(30.845)


def test_reruns_are_byte_identical(tmp_path, short_config):
    _, a = _run(tmp_path, "a", "simulate-pass", "--config", str(short_config))
    _, b = _run(tmp_path, "b", "simulate-pass", "--config", str(short_config))
    _, c = _run(tmp_path, "c", "simulate-pass", "--config", str(short_config), "--workers", "3")
    for name in ("qkd_pass.csv", "qkpc_pass.csv", "loss_profile.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_exported_profile_feeds_back(tmp_path, short_config):
    _, a = _run(tmp_path, "a", "simulate-pass", "--config", str(short_config))
    prof = ingest_loss_csv(a / "loss_profile.csv")
    assert len(prof) == len(_read_csv(a / "qkd_pass.csv"))
    code, b = _run(tmp_path, "b", "simulate-pass", "--loss-csv", str(a / "loss_profile.csv"))
    assert code == 0
    summary = json.loads((b / "summary.json").read_text())
    assert summary["profile_source"] == "ingested"
    assert not (b / "loss_profile.csv").exists()
    first = json.loads((a / "summary.json").read_text())
    assert summary["total_skl_bits"] == pytest.approx(first["total_skl_bits"], rel=1e-6)


def test_one_window_pass(tmp_path):
    loss = tmp_path / "loss.csv"
    loss.write_text("t_s,loss_db\n0,31\n")
    code, out = _run(tmp_path, "o", "simulate-pass", "--loss-csv", str(loss))
    assert code == 0
    assert len(_read_csv(out / "qkd_pass.csv")) == 1


def test_qkpc_profile(tmp_path, short_config):
    code, out = _run(tmp_path, "q", "qkpc-profile", "--config", str(short_config), "--plots")
    assert code == 0
    assert not (out / "qkd_pass.csv").exists()
    rows = _read_csv(out / "qkpc_pass.csv")
    assert all(float(r["qkpc_rate_bps"]) == pytest.approx(0.68e9, rel=0.01) for r in rows)
    assert (out / "qkpc_rate_vs_time.svg").read_text().startswith("<svg")


def test_plots_written(tmp_path, short_config):
    _, out = _run(tmp_path, "p", "simulate-pass", "--config", str(short_config), "--plots")
    for name in ("skr_vs_time.svg", "qber_vs_time.svg", "loss_vs_elevation.svg",
                 "parameters_vs_time.svg"):
        assert (out / name).stat().st_size > 0


def test_aperture_sweep(tmp_path, short_config, capsys):
    code, out = _run(tmp_path, "s", "aperture-sweep", "--config", str(short_config),
                     "--d-t", "0.03", "0.06")
    assert code == 0
    rows = _read_csv(out / "aperture_sweep.csv")
    assert float(rows[1]["skr_hz"]) > float(rows[0]["skr_hz"])
    assert "d_t = 0.030 m" in capsys.readouterr().out


@pytest.mark.parametrize("text", ["qkd.optimize = false\nqkd.mu1 = 0.1\nqkd.mu2 = 0.2\n",
                                  "channel.d_t_m = 0\n", "run.trials = 1\n",
                                  "orbit.nonsense = 3\n", "orbit.h_km = many\n"])
def test_bad_config_exits_one(tmp_path, text, capsys):
    p = tmp_path / "bad.conf"
    p.write_text(text)
    code, _ = _run(tmp_path, "x", "simulate-pass", "--config", str(p))
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_missing_inputs_exit_one(tmp_path):
    assert _run(tmp_path, "x", "simulate-pass", "--config", str(tmp_path / "no.conf"))[0] == 1
    assert _run(tmp_path, "x", "simulate-pass", "--loss-csv", str(tmp_path / "no.csv"))[0] == 1
    assert _run(tmp_path, "x", "aperture-sweep", "--d-t", "0")[0] == 1
    assert _run(tmp_path, "x", "validate", "--trials", "3")[0] == 1
    assert _run(tmp_path, "x", "simulate-pass", "--workers", "0")[0] == 1


def test_impossible_calibration_exits_two(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("channel.zenith_loss_db = 10\n")
    assert _run(tmp_path, "x", "simulate-pass", "--config", str(p))[0] == 2


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["fly"])


@pytest.mark.slow
def test_validate_command(tmp_path, capsys):
    code, _ = _run(tmp_path, "v", "validate", "--trials", "10")
    out = capsys.readouterr().out
    assert code == 0, out
    assert "PASS" in out


@pytest.mark.slow
def test_validate_reports_failure_with_loose_security(tmp_path, capsys):
    # eps_s = 0.5 shrinks every confidence interval, so containment breaks
    p = tmp_path / "loose.conf"
    p.write_text("qkd.eps_s = 0.5\n")
    code, _ = _run(tmp_path, "v", "validate", "--config", str(p), "--trials", "20")
    assert code == 3
    assert "FAIL" in capsys.readouterr().out
