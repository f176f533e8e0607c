"""CLI surface: config handling, figure CSVs, sweeps, the validate gate.

Everything runs in process through main(); the CSVs land in tmp_path.
Slow figures (tradeoff sweeps, fading bounds) are exercised by the
figure script rather than here.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from underlaysim.cli import (ConfigError, FIGURE_IDS, apply_set,
                             default_config, main, parse_config,
                             render_config)
from underlaysim.power_control import (ScenarioParams, controlled_power_det,
                                       linear_to_db)
from underlaysim.throughput import throughput_det, throughput_ideal_det

REPO = Path(__file__).resolve().parents[1]


def _read_csv(path: Path):
    meta, header, rows = [], None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            meta.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


# ------------------------------------------------------------ configuration

def test_render_parse_round_trip():
    cfg = default_config()
    text = render_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2.sections == cfg.sections
    assert render_config(cfg2) == text


def test_shipped_default_config_is_canonical():
    shipped = (REPO / "configs" / "default.ini").read_text()
    assert shipped == render_config(default_config())


def test_partial_config_keeps_other_defaults():
    cfg = parse_config("[scenario]\ngamma_db = -12\n")
    assert cfg.get("scenario", "gamma_db") == "-12"
    assert cfg.get("scenario", "rho_out") == "0.1"
    assert cfg.get("mc", "trials") == "100000"


def test_parse_rejects_unknown_names():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[nope]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[scenario]\nnope = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[scenario]\nrho_out = 2\n")
    with pytest.raises(ConfigError):
        parse_config("not ini at all [")


def test_apply_set():
    cfg = default_config()
    apply_set(cfg, "scenario.gamma_db=-12")
    assert cfg.get("scenario", "gamma_db") == "-12"
    apply_set(cfg, "mc.trials = 500")
    assert cfg.get("mc", "trials") == "500"
    with pytest.raises(ConfigError):
        apply_set(cfg, "scenario.nope=1")
    with pytest.raises(ConfigError):
        apply_set(cfg, "no equals sign")


def test_config_to_params_converts_units():
    params = default_config().params()
    ref = ScenarioParams()
    for field in ("f_s", "sigma2", "theta_i", "rho_out", "frame_len",
                  "tau_p", "gamma", "g_pt_sr", "g_st_sr"):
        assert getattr(params, field) == pytest.approx(
            getattr(ref, field), rel=1e-12), field
    cfg = default_config()
    apply_set(cfg, "scenario.gamma_db=-10")
    assert cfg.params().gamma == pytest.approx(0.1)


# ----------------------------------------------------------------- figures

def test_fig3_content_and_determinism(tmp_path):
    out1 = tmp_path / "fig3.csv"
    out2 = tmp_path / "fig3_again.csv"
    assert main(["figure", "fig3", "--out", str(out1)]) == 0
    assert main(["figure", "fig3", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    meta, header, rows = _read_csv(out1)
    assert header == ["tau_ms", "gamma_star_dB"]
    assert len(rows) == 49
    taus = [float(r[0]) for r in rows]
    assert taus[0] == pytest.approx(0.1)
    assert taus[-1] == pytest.approx(300.0)
    vals = [float(r[1]) for r in rows]
    nan_mask = [math.isnan(v) for v in vals]
    assert any(nan_mask), "short windows should have no bound"
    assert not nan_mask[-1]
    # nan rows all precede the first defined row
    first_ok = nan_mask.index(False)
    assert all(nan_mask[:first_ok]) and not any(nan_mask[first_ok:])
    defined = vals[first_ok:]
    assert all(a < b for a, b in zip(defined, defined[1:]))
    # flattens onto the long-window limit
    assert defined[-1] == pytest.approx(-10.0, abs=0.2)
    assert any("no operating bound" in line for line in meta)


def test_fig6a_power_traces(tmp_path):
    out = tmp_path / "fig6a.csv"
    assert main(["figure", "fig6a", "--out", str(out)]) == 0
    _, header, rows = _read_csv(out)
    assert header == ["tau_ms", "p_cont_dBm", "p_cont_dBm_ideal"]
    assert len(rows) == 37
    p = [float(r[1]) for r in rows]
    ideal = {float(r[2]) for r in rows}
    # longer sensing always buys power, never past the perfect-knowledge level
    assert all(a < b for a, b in zip(p, p[1:]))
    assert len(ideal) == 1
    assert all(v < ideal.pop() for v in p[-1:])


def test_fig6b_rate_traces(tmp_path):
    out = tmp_path / "fig6b.csv"
    assert main(["figure", "fig6b", "--out", str(out),
                 "--set", "mc.trials=400"]) == 0
    meta, header, rows = _read_csv(out)
    assert header == ["tau_ms", "rs_EM", "rs_IM", "rs_sim"]
    rs_im = {float(r[2]) for r in rows}
    assert len(rs_im) == 1
    assert rs_im.pop() == pytest.approx(throughput_ideal_det(ScenarioParams()),
                                        rel=1e-9)
    rs_em = np.array([float(r[1]) for r in rows])
    i = int(np.argmax(rs_em))
    assert 0 < i < rs_em.size - 1
    assert np.all(np.diff(rs_em)[:i] > 0.0)
    assert np.all(np.diff(rs_em)[i:] < 0.0)
    for j, row in enumerate(rows):
        if j % 3 == 0:
            assert row[3] != ""
        else:
            assert row[3] == ""
    assert any("trials per marker" in line for line in meta)


def test_fig4a_capacity_cdfs(tmp_path):
    out = tmp_path / "fig4a.csv"
    assert main(["figure", "fig4a", "--out", str(out),
                 "--set", "mc.trials=300"]) == 0
    _, header, rows = _read_csv(out)
    assert header[0] == "c_bits"
    assert [h for h in header if h.startswith("cdf_")] == [
        "cdf_inr_m10dB", "cdf_inr_0dB", "cdf_inr_10dB"]
    assert [h for h in header if h.startswith("sim_")] == [
        "sim_inr_m10dB", "sim_inr_0dB", "sim_inr_10dB"]
    for k in range(1, 4):
        col = [float(r[k]) for r in rows]
        assert all(0.0 <= v <= 1.0 for v in col)
        assert all(a <= b for a, b in zip(col, col[1:]))
    # markers only on the stride rows
    assert rows[0][4] != "" and rows[1][4] == "" and rows[3][4] != ""


def test_unknown_figure_id_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["figure", "nope", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_figure_requires_out(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["figure", "fig3"])
    assert exc.value.code == 2


def test_figure_ids_catalog():
    assert "fig3" in FIGURE_IDS
    assert len(FIGURE_IDS) == 12


# ------------------------------------------------------------------ sweeps

def test_sweep_single_point_matches_the_rule(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--out", str(out),
               "--set", "sweep.tau_ms=1",
               "--set", "sweep.include_rs=true"])
    assert rc == 0
    _, header, rows = _read_csv(out)
    assert header == ["tau_ms", "gamma_dB", "rho_out", "m",
                      "p_cont_dBm", "regime", "rs"]
    assert len(rows) == 1
    row = rows[0]
    params = ScenarioParams()
    want = linear_to_db(controlled_power_det(params, 1e-3).p_cont)
    assert float(row[4]) == pytest.approx(want, abs=1e-8)
    assert row[3] == "inf"
    assert row[5] == "interference-limited"
    assert float(row[6]) == pytest.approx(throughput_det(params, 1e-3), rel=1e-8)


def test_sweep_grid_cap(tmp_path):
    rc = main(["sweep", "--out", str(tmp_path / "big.csv"),
               "--set", "sweep.tau_ms=logspace 0.1 10 101",
               "--set", "sweep.gamma_db=linspace -20 10 100",
               "--set", "sweep.rho_out=linspace 0.01 0.2 100"])
    assert rc == 2


def test_sweep_window_outside_frame_is_numeric_error(tmp_path):
    rc = main(["sweep", "--out", str(tmp_path / "bad.csv"),
               "--set", "sweep.tau_ms=100"])
    assert rc == 3


# ---------------------------------------------------------------- validate

def test_validate_passes_on_defaults(tmp_path, capsys):
    # 20000 trials is the regime the KS and 4-sigma windows are calibrated
    # for; far fewer draws would make those checks coin flips
    rc = main(["validate", "--trials", "20000"])
    out = capsys.readouterr().out
    assert rc == 0
    check_lines = [l for l in out.splitlines() if l.startswith("check")]
    assert len(check_lines) == 13
    assert all("  PASS  " in l for l in check_lines)
    assert out.rstrip().endswith("validate: PASS (13/13 checks)")


def test_validate_catches_tampering(capsys):
    rc = main(["validate", "--trials", "2000",
               "--set", "scenario.theta_i_dbm=-100"])
    out = capsys.readouterr().out
    assert rc == 1
    fail_lines = [l for l in out.splitlines()
                  if l.startswith("check") and "  FAIL  " in l]
    assert any("anchor" in l for l in fail_lines)
    assert "validate: FAIL" in out


def test_validate_reads_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "alt.ini"
    cfg_path.write_text("[mc]\ntrials = 20000\nseed = 7\n")
    rc = main(["validate", "--config", str(cfg_path)])
    assert rc == 0
    assert "PASS (13/13" in capsys.readouterr().out


def test_missing_config_file(tmp_path):
    rc = main(["validate", "--config", str(tmp_path / "absent.ini")])
    assert rc == 2


def test_bad_set_value_is_config_error(tmp_path):
    rc = main(["sweep", "--out", str(tmp_path / "x.csv"),
               "--set", "scenario.rho_out=2"])
    assert rc == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "underlaysim" in capsys.readouterr().out
