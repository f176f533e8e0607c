"""Command-line entry points: figure data, parameter sweeps, validation.

Configuration is INI text with dB-valued fields; parsing keeps the raw
strings so CSV metadata echoes the configuration byte for byte, and every
dB-to-linear conversion happens in this module and nowhere else. Outputs
carry no timestamps: a given (config, seed, version) renders identical
bytes on every run.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__, dists, montecarlo, specfun, throughput
from .dists import NakagamiGain
from .power_control import (ScenarioParams, controlled_power_det,
                            controlled_power_fading, db_to_linear,
                            default_fading, linear_to_db, outage_det,
                            perf_bound_asymptote, perf_bound_det,
                            perf_bound_fading, samples_for)
from .throughput import (Model, capacity_law_det, mean_capacity,
                         optimize_tradeoff, throughput_det,
                         throughput_fading, throughput_ideal_det,
                         throughput_ideal_fading, throughput_no_pc_det,
                         throughput_no_pc_fading)

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "default_config",
    "parse_config",
    "render_config",
    "cmd_figure",
    "cmd_sweep",
    "cmd_validate",
    "main",
    "FIGURE_IDS",
]


class ConfigError(Exception):
    """Configuration that cannot be parsed or fails validation."""


_DEFAULTS: dict[str, dict[str, str]] = {
    "scenario": {
        "f_s_hz": "1e6",
        "sigma2_dbm": "-100",
        "p_tx_pr_dbm": "0",
        "p_tx_pt_dbm": "0",
        "theta_i_dbm": "-110",
        "rho_out": "0.1",
        "p_full_dbm": "0",
        "frame_ms": "100",
        "tau_p_us": "10",
        "gamma_db": "0",
        "g_pt_sr_db": "-100",
        "g_st_sr_db": "-80",
    },
    "fading": {
        "m": "1, 5",
    },
    "mc": {
        "trials": "100000",
        "seed": "20250311",
        "jobs": "1",
    },
    "sweep": {
        "tau_ms": "logspace 0.1 10 13",
        "gamma_db": "0",
        "rho_out": "0.1",
        "m": "inf",
        "include_rs": "false",
    },
}

_SWEEP_ROW_CAP = 1_000_000


@dataclass
class ScenarioConfig:
    """Raw configuration values, keyed section -> key -> string."""

    sections: dict[str, dict[str, str]]

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key]

    def _float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from None

    def _int(self, section: str, key: str) -> int:
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: not an integer: {raw!r}") from None

    def params(self) -> ScenarioParams:
        try:
            return ScenarioParams(
                f_s=self._float("scenario", "f_s_hz"),
                sigma2=db_to_linear(self._float("scenario", "sigma2_dbm")),
                p_tx_pr=db_to_linear(self._float("scenario", "p_tx_pr_dbm")),
                p_tx_pt=db_to_linear(self._float("scenario", "p_tx_pt_dbm")),
                theta_i=db_to_linear(self._float("scenario", "theta_i_dbm")),
                rho_out=self._float("scenario", "rho_out"),
                p_full=db_to_linear(self._float("scenario", "p_full_dbm")),
                frame_len=self._float("scenario", "frame_ms") * 1e-3,
                tau_p=self._float("scenario", "tau_p_us") * 1e-6,
                gamma=db_to_linear(self._float("scenario", "gamma_db")),
                g_pt_sr=db_to_linear(self._float("scenario", "g_pt_sr_db")),
                g_st_sr=db_to_linear(self._float("scenario", "g_st_sr_db")),
            )
        except ValueError as exc:
            raise ConfigError(f"scenario: {exc}") from None

    def m_values(self) -> list[float]:
        out = []
        for tok in self.get("fading", "m").split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                value = float(tok)
            except ValueError:
                raise ConfigError(f"fading.m: not a number: {tok!r}") from None
            if not (value >= 0.5):
                raise ConfigError("fading.m: every m must be at least 0.5")
            out.append(value)
        if not out:
            raise ConfigError("fading.m: need at least one value")
        return out

    def trials(self) -> int:
        n = self._int("mc", "trials")
        if n < 2:
            raise ConfigError("mc.trials must be at least 2")
        return n

    def seed(self) -> int:
        n = self._int("mc", "seed")
        if n < 0:
            raise ConfigError("mc.seed must be nonnegative")
        return n

    def jobs(self) -> int:
        n = self._int("mc", "jobs")
        if n < 1:
            raise ConfigError("mc.jobs must be at least 1")
        return n

    def sweep_axis(self, key: str, allow_inf: bool = False) -> list[float]:
        raw = self.get("sweep", key).strip()
        parts = raw.split()
        if parts and parts[0] in ("logspace", "linspace"):
            if len(parts) != 4:
                raise ConfigError(f"sweep.{key}: expected '{parts[0]} lo hi n'")
            try:
                lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
            except ValueError:
                raise ConfigError(f"sweep.{key}: bad grid spec: {raw!r}") from None
            if n < 1 or not (hi > lo):
                raise ConfigError(f"sweep.{key}: bad grid spec: {raw!r}")
            if parts[0] == "logspace":
                if lo <= 0.0:
                    raise ConfigError(f"sweep.{key}: logspace needs positive endpoints")
                return list(np.geomspace(lo, hi, n))
            return list(np.linspace(lo, hi, n))
        out = []
        for tok in raw.split(","):
            tok = tok.strip()
            if not tok:
                continue
            if allow_inf and tok in ("inf", "Inf", "INF"):
                out.append(math.inf)
                continue
            try:
                out.append(float(tok))
            except ValueError:
                raise ConfigError(f"sweep.{key}: not a number: {tok!r}") from None
        if not out:
            raise ConfigError(f"sweep.{key}: need at least one value")
        return out

    def include_rs(self) -> bool:
        raw = self.get("sweep", "include_rs").strip().lower()
        if raw in ("true", "yes", "1"):
            return True
        if raw in ("false", "no", "0"):
            return False
        raise ConfigError(f"sweep.include_rs: expected true or false, got {raw!r}")

    def validate(self) -> None:
        self.params()
        self.m_values()
        self.trials()
        self.seed()
        self.jobs()
        for key in ("tau_ms", "gamma_db", "rho_out"):
            self.sweep_axis(key)
        self.sweep_axis("m", allow_inf=True)
        self.include_rs()


def default_config() -> ScenarioConfig:
    return ScenarioConfig({s: dict(kv) for s, kv in _DEFAULTS.items()})


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    cfg = default_config()
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            cfg.sections[section][key] = value.strip()
    cfg.validate()
    return cfg


def render_config(cfg: ScenarioConfig) -> str:
    """Canonical INI text: fixed section and key order, raw values."""
    buf = io.StringIO()
    first = True
    for section, keys in _DEFAULTS.items():
        if not first:
            buf.write("\n")
        first = False
        buf.write(f"[{section}]\n")
        for key in keys:
            buf.write(f"{key} = {cfg.sections[section][key]}\n")
    return buf.getvalue()


def apply_set(cfg: ScenarioConfig, assignment: str) -> None:
    """Apply one 'section.key=value' override in place."""
    target, _, value = assignment.partition("=")
    if not _:
        raise ConfigError(f"--set expects section.key=value, got {assignment!r}")
    section, _, key = target.strip().partition(".")
    key = key.strip()
    if not key or section not in _DEFAULTS or key not in _DEFAULTS[section]:
        raise ConfigError(f"--set: unknown setting {target.strip()!r}")
    cfg.sections[section][key] = value.strip()


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".10g")


def _meta_lines(cfg: ScenarioConfig, command: str, notes: list[str]) -> list[str]:
    lines = [f"# underlaysim {__version__}", f"# command: {command}"]
    for section, keys in _DEFAULTS.items():
        for key in keys:
            lines.append(f"# config {section}.{key} = {cfg.sections[section][key]}")
    for note in notes:
        lines.append(f"# note: {note}")
    return lines


def _write_csv(out_path: str, meta: list[str], header: list[str], rows) -> None:
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for line in meta:
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(cell) for cell in row) + "\n")


def _m_tag(m: float) -> str:
    return "m" + format(m, "g").replace(".", "p").replace("-", "m")


# every third row carries the simulated overlay so plotted markers stay sparse
_MARKER_STRIDE = 3


def _empirical_cdf(sorted_samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_samples, grid, side="right") / sorted_samples.size


def _fig3(cfg: ScenarioConfig):
    # extends well past the frame so the curve visibly flattens onto the
    # long-window limit; the bound itself has no frame dependence
    params = cfg.params()
    taus = np.geomspace(1e-4, 0.3, 49)
    rows, missing = [], 0
    for tau in taus:
        try:
            gamma_star = perf_bound_det(params, float(tau))
            cell = linear_to_db(gamma_star)
        except specfun.BracketError:
            cell = math.nan
            missing += 1
        rows.append([tau * 1e3, cell])
    notes = []
    if missing:
        notes.append(f"{missing} short-window rows have no operating bound; "
                     "cells left nan")
    return ["tau_ms", "gamma_star_dB"], rows, notes


_FIG4_INR_OFFSETS = (-10.0, 0.0, 10.0)
_FIG4_TAUS = (1e-4, 1e-3, 1e-2)
_FIG4_GAMMA_DB = 10.0
_FIG4_POWER = 1.0


def _fig4_traces(cfg: ScenarioConfig, panel: str):
    params = cfg.params()
    base_g_db = linear_to_db(params.g_pt_sr)
    if panel == "a":
        for off in _FIG4_INR_OFFSETS:
            label = f"inr_{format(off, 'g').replace('-', 'm').replace('.', 'p')}dB"
            p2 = replace(params, gamma=db_to_linear(_FIG4_GAMMA_DB),
                         g_pt_sr=db_to_linear(base_g_db + off))
            yield label, p2, 1e-3
    else:
        for tau in _FIG4_TAUS:
            label = f"tau_{format(tau * 1e3, 'g').replace('.', 'p')}ms"
            p2 = replace(params, gamma=db_to_linear(_FIG4_GAMMA_DB))
            yield label, p2, tau


def _fig4(cfg: ScenarioConfig, panel: str):
    grid = np.linspace(2.0, 8.0, 241)
    traces = list(_fig4_traces(cfg, panel))
    header = ["c_bits"]
    cols, sims = [], []
    trials, seed, jobs = cfg.trials(), cfg.seed(), cfg.jobs()
    for k, (label, p2, tau) in enumerate(traces):
        dist = capacity_law_det(p2, tau, _FIG4_POWER)
        cols.append(dists.capacity_cdf(dist, grid))
        header.append(f"cdf_{label}")
        mc = montecarlo.run_trials_det(p2, tau, trials, seed + k,
                                       fixed_power=_FIG4_POWER, jobs=jobs)
        sims.append(_empirical_cdf(mc.c_hat_sorted, grid))
    header.extend(f"sim_{label}" for label, _, _ in traces)
    rows = []
    for i, c in enumerate(grid):
        row = [c] + [col[i] for col in cols]
        for sim in sims:
            row.append(sim[i] if i % _MARKER_STRIDE == 0 else "")
        rows.append(row)
    notes = [f"simulated overlay at every {_MARKER_STRIDE}rd row, "
             f"{trials} trials per trace"]
    return header, rows, notes


_FIG5_M = (0.5, 1.0, 2.0, 5.0)


def _fig5(cfg: ScenarioConfig):
    params = cfg.params()
    taus = np.geomspace(1e-4, 1e-2, 41)
    header = ["tau_ms"] + [f"gamma_star_dB_{_m_tag(m)}" for m in _FIG5_M]
    header.append("gamma_star_dB_det")
    rows, missing = [], 0
    for tau in taus:
        row = [tau * 1e3]
        for m in _FIG5_M:
            try:
                row.append(linear_to_db(perf_bound_fading(
                    params, NakagamiGain(m, 1.0), float(tau))))
            except specfun.BracketError:
                row.append(math.nan)
                missing += 1
        try:
            row.append(linear_to_db(perf_bound_det(params, float(tau))))
        except specfun.BracketError:
            row.append(math.nan)
            missing += 1
        rows.append(row)
    notes = []
    if missing:
        notes.append(f"{missing} cells have no operating bound (window too "
                     "short); left nan")
    return header, rows, notes


_FIG68_TAUS = np.geomspace(1e-5, 1e-2, 37)


def _fig6a(cfg: ScenarioConfig):
    params = cfg.params()
    gain = params.gamma * params.sigma2 / params.p_tx_pr
    p_ideal = min(params.theta_i / gain, params.p_full)
    rows = []
    for tau in _FIG68_TAUS:
        pc = controlled_power_det(params, float(tau))
        rows.append([tau * 1e3, linear_to_db(pc.p_cont), linear_to_db(p_ideal)])
    return ["tau_ms", "p_cont_dBm", "p_cont_dBm_ideal"], rows, []


def _fig6b(cfg: ScenarioConfig):
    params = cfg.params()
    trials, seed, jobs = cfg.trials(), cfg.seed(), cfg.jobs()
    r_ideal = throughput_ideal_det(params)
    rows = []
    for i, tau in enumerate(_FIG68_TAUS):
        row = [tau * 1e3, throughput_det(params, float(tau)), r_ideal]
        if i % _MARKER_STRIDE == 0:
            mc = montecarlo.run_trials_det(params, float(tau), trials,
                                           seed + i, jobs=jobs)
            row.append(mc.mean_throughput)
        else:
            row.append("")
        rows.append(row)
    notes = [f"simulated overlay at every {_MARKER_STRIDE}rd row, "
             f"{trials} trials per marker"]
    return ["tau_ms", "rs_EM", "rs_IM", "rs_sim"], rows, notes


_FIG79_GAMMAS_DB = np.linspace(-20.0, 10.0, 13)
_FIG7_PFULL_DB = (0.0, -10.0)


def _pfull_tag(p_db: float) -> str:
    return "pfull_" + format(p_db, "g").replace("-", "m").replace(".", "p") + "dBm"


def _fig7(cfg: ScenarioConfig, panel: str):
    params = cfg.params()
    if panel == "b":
        params = replace(params, g_pt_sr=params.g_pt_sr * 10.0)
    header = ["gamma_dB"]
    for p_db in _FIG7_PFULL_DB:
        tag = _pfull_tag(p_db)
        header += [f"rs_EM_{tag}", f"rs_IM_{tag}", f"rs_NPC_{tag}"]
    rows = []
    for g_db in _FIG79_GAMMAS_DB:
        row = [g_db]
        for p_db in _FIG7_PFULL_DB:
            p2 = replace(params, gamma=db_to_linear(float(g_db)),
                         p_full=db_to_linear(p_db))
            curve = optimize_tradeoff(p2, Model.ESTIMATION)
            row.append(curve.r_s_opt)
            row.append(throughput_ideal_det(p2))
            row.append(throughput_no_pc_det(p2)[1])
        rows.append(row)
    notes = ["EM column reports the tau-optimized throughput per gamma"]
    return header, rows, notes


def _fig8a(cfg: ScenarioConfig):
    params = cfg.params()
    m_values = cfg.m_values()
    header = ["tau_ms"]
    for m in m_values:
        header += [f"p_cont_dBm_{_m_tag(m)}", f"p_cont_dBm_ideal_{_m_tag(m)}"]
    ideal = {}
    for m in m_values:
        links = default_fading(params, m)
        x_rho = dists.nakagami_gain_quantile(links.pr_st, 1.0 - params.rho_out)
        ideal[m] = min(params.theta_i / x_rho, params.p_full)
    rows = []
    for tau in _FIG68_TAUS:
        row = [tau * 1e3]
        for m in m_values:
            links = default_fading(params, m)
            pc = controlled_power_fading(params, links.pr_st, float(tau))
            row += [linear_to_db(pc.p_cont), linear_to_db(ideal[m])]
        rows.append(row)
    return header, rows, []


def _fig8b(cfg: ScenarioConfig):
    params = cfg.params()
    m_values = cfg.m_values()
    trials, seed, jobs = cfg.trials(), cfg.seed(), cfg.jobs()
    header = ["tau_ms"]
    for m in m_values:
        header += [f"rs_EM_{_m_tag(m)}", f"rs_IM_{_m_tag(m)}", f"rs_sim_{_m_tag(m)}"]
    rows = []
    for i, tau in enumerate(_FIG68_TAUS):
        row = [tau * 1e3]
        for k, m in enumerate(m_values):
            links = default_fading(params, m)
            row.append(throughput_fading(params, links, float(tau)))
            row.append(throughput_ideal_fading(params, links))
            if i % _MARKER_STRIDE == 0:
                mc = montecarlo.run_trials_fading(
                    params, links, float(tau), trials,
                    seed + 100 * k + i, jobs=jobs)
                row.append(mc.mean_throughput)
            else:
                row.append("")
        rows.append(row)
    notes = [f"simulated overlay at every {_MARKER_STRIDE}rd row, "
             f"{trials} trials per marker"]
    return header, rows, notes


def _fig9(cfg: ScenarioConfig, panel: str):
    params = cfg.params()
    if panel == "b":
        params = replace(params, g_pt_sr=params.g_pt_sr * 10.0)
    m_values = cfg.m_values()
    header = ["gamma_dB"]
    for m in m_values:
        header += [f"rs_EM_{_m_tag(m)}", f"rs_IM_{_m_tag(m)}", f"rs_NPC_{_m_tag(m)}"]
    rows = []
    for g_db in _FIG79_GAMMAS_DB:
        row = [g_db]
        p2 = replace(params, gamma=db_to_linear(float(g_db)))
        for m in m_values:
            links = default_fading(p2, m)
            curve = optimize_tradeoff(p2, Model.ESTIMATION, links=links)
            row.append(curve.r_s_opt)
            row.append(throughput_ideal_fading(p2, links))
            row.append(throughput_no_pc_fading(p2, links)[1])
        rows.append(row)
    notes = ["EM column reports the tau-optimized throughput per gamma"]
    return header, rows, notes


_FIGURES = {
    "fig3": _fig3,
    "fig4a": lambda cfg: _fig4(cfg, "a"),
    "fig4b": lambda cfg: _fig4(cfg, "b"),
    "fig5": _fig5,
    "fig6a": _fig6a,
    "fig6b": _fig6b,
    "fig7a": lambda cfg: _fig7(cfg, "a"),
    "fig7b": lambda cfg: _fig7(cfg, "b"),
    "fig8a": _fig8a,
    "fig8b": _fig8b,
    "fig9a": lambda cfg: _fig9(cfg, "a"),
    "fig9b": lambda cfg: _fig9(cfg, "b"),
}

FIGURE_IDS = tuple(sorted(_FIGURES))


def cmd_figure(fig_id: str, cfg: ScenarioConfig, out_path: str) -> None:
    if fig_id not in _FIGURES:
        raise ConfigError(f"unknown figure id {fig_id!r}; "
                          f"choose from {', '.join(FIGURE_IDS)}")
    header, rows, notes = _FIGURES[fig_id](cfg)
    meta = _meta_lines(cfg, f"figure {fig_id}", notes)
    _write_csv(out_path, meta, header, rows)


def cmd_sweep(cfg: ScenarioConfig, out_path: str) -> None:
    params = cfg.params()
    taus_ms = cfg.sweep_axis("tau_ms")
    gammas_db = cfg.sweep_axis("gamma_db")
    rhos = cfg.sweep_axis("rho_out")
    ms = cfg.sweep_axis("m", allow_inf=True)
    total = len(taus_ms) * len(gammas_db) * len(rhos) * len(ms)
    if total > _SWEEP_ROW_CAP:
        raise ConfigError(
            f"sweep grid has {total} rows, above the cap of {_SWEEP_ROW_CAP}")
    include_rs = cfg.include_rs()
    header = ["tau_ms", "gamma_dB", "rho_out", "m", "p_cont_dBm", "regime"]
    if include_rs:
        header.append("rs")
    rows = []
    for tau_ms in taus_ms:
        tau = tau_ms * 1e-3
        for g_db in gammas_db:
            for rho in rhos:
                for m in ms:
                    p2 = replace(params, gamma=db_to_linear(g_db), rho_out=rho)
                    if math.isinf(m):
                        pc = controlled_power_det(p2, tau)
                        m_cell = "inf"
                    else:
                        links = default_fading(p2, m)
                        pc = controlled_power_fading(p2, links.pr_st, tau)
                        m_cell = format(m, "g")
                    row = [tau_ms, g_db, rho, m_cell,
                           linear_to_db(pc.p_cont), pc.regime.value]
                    if include_rs:
                        if math.isinf(m):
                            row.append(throughput_det(p2, tau))
                        else:
                            row.append(throughput_fading(p2, links, tau))
                    rows.append(row)
    meta = _meta_lines(cfg, "sweep", [f"{total} rows"])
    _write_csv(out_path, meta, header, rows)


def _validate_checks(cfg: ScenarioConfig):
    """Yield (name, passed, measured, tolerance) tuples, cheap checks first.

    Mixes self-consistency checks (the package against its own Monte Carlo)
    with anchors to the reference scenario's published values; on configs
    that stray from the reference scenario the anchors are expected to
    fail, which is what makes tampering visible.
    """
    params = cfg.params()
    trials = min(cfg.trials(), 100_000)
    mc_small = min(trials, 20_000)
    seed, jobs = cfg.seed(), cfg.jobs()
    tau_ref = 1e-3

    # 1: the gamma surrogate must preserve both matched moments exactly
    worst = 0.0
    for law in (dists.NcChiSq(7, 3.2, 2.5e-9), dists.NcChiSq(1000, 1000.0, 1e-13),
                dists.NcChiSq(2, 0.0, 1e-10)):
        ga = dists.gamma_match(law)
        worst = max(worst, abs(ga.mean - law.mean) / law.mean,
                    abs(ga.variance - law.variance) / law.variance)
    yield "surrogate moment identity", worst <= 1e-12, f"{worst:.2e}", "<= 1e-12"

    # 2: surrogate of the receive-power estimate at 1000 samples, unit SNR
    ga = dists.gamma_match(dists.received_power_law(1.0, 1000, params.sigma2))
    shape_err = abs(ga.shape - 2000.0 / 3.0) / (2000.0 / 3.0)
    scale_err = abs(ga.scale - 0.003 * params.sigma2) / (0.003 * params.sigma2)
    ok = shape_err <= 1e-9 and scale_err <= 1e-9
    yield ("estimate surrogate anchor", ok,
           f"shape err {shape_err:.2e}, scale err {scale_err:.2e}", "<= 1e-9")

    # 3: controlled power at 1 ms on the reference scenario
    pc = controlled_power_det(params, tau_ref)
    p_db = linear_to_db(pc.p_cont)
    yield ("controlled power anchor (1 ms)", abs(p_db + 10.41) <= 0.1,
           f"{p_db:.3f} dBm", "-10.41 +- 0.1 dBm")

    # 4: operating bound at 50 ms sits 0.4 dB under its long-window limit
    limit_db = linear_to_db(perf_bound_asymptote(params))
    gamma_star_db = math.nan
    try:
        gamma_star_db = linear_to_db(perf_bound_det(params, 0.05))
        ok = (abs(limit_db + 10.0) <= 1e-9
              and abs(gamma_star_db + 10.40) <= 0.1)
    except specfun.BracketError:
        ok = False
    yield ("operating bound anchor (50 ms)", ok,
           f"{gamma_star_db:.3f} dB, limit {limit_db:.3f} dB",
           "-10.40 +- 0.1 dB, limit -10 dB")

    # 5: the closed-form power rule against simulated outage and capacity
    mc = montecarlo.run_trials_det(params, tau_ref, trials, seed, jobs=jobs)
    resid = abs(outage_det(params, tau_ref, pc.p_cont) - params.rho_out)
    gap = abs(mc.outage_rate - params.rho_out)
    ok = resid <= 1e-9 and gap <= 4.0 * mc.outage_se
    yield ("outage self-consistency (det)", ok,
           f"analytic residual {resid:.1e}, mc gap {gap:.2e}",
           f"<= 1e-9 and <= 4 se ({4.0 * mc.outage_se:.2e})")

    dist = capacity_law_det(params, tau_ref, pc.p_cont)
    c_gap = abs(mc.mean_capacity - mean_capacity(dist))
    ok = c_gap <= 4.0 * mc.capacity_se
    yield ("mean capacity vs simulation (det)", ok, f"gap {c_gap:.2e}",
           f"<= 4 se ({4.0 * mc.capacity_se:.2e})")

    # 6: capacity density normalizes to one
    worst = 0.0
    for tau in (1e-4, 1e-3):
        d = capacity_law_det(params, tau, pc.p_cont)
        hint = math.log1p(d.ratio_scale * d.gain_approx.shape
                          / d.interf_approx.shape) / math.log(2.0)
        total = specfun.integrate(lambda x, d=d: dists.capacity_pdf(d, x),
                                  0.0, math.inf, scale_hint=hint)
        worst = max(worst, abs(total - 1.0))
    yield "capacity density normalization", worst <= 1e-6, f"{worst:.2e}", "<= 1e-6"

    # 7: capacity law against exact-law sampling
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    n_ks = mc_small
    n_ref = samples_for(tau_ref, params.f_s)
    g_draw = dists.sample_ncx2(dists.pilot_gain_law(
        params.g_st_sr, params.pilot_samples, params.sigma2), rng, n_ks)
    i_draw = dists.sample_ncx2(dists.interference_power_law(
        params.g_pt_sr, params.p_tx_pt, n_ref, params.sigma2), rng, n_ks)
    c_draw = np.sort(np.log2(1.0 + g_draw * pc.p_cont / i_draw))
    ks = montecarlo.ks_distance(c_draw, lambda x: dists.capacity_cdf(dist, x))
    yield "capacity law KS vs exact draws", ks <= 0.02, f"{ks:.4f}", "<= 0.02"

    # 8: the estimation-throughput curve peaks inside the grid, near ideal
    curve = optimize_tradeoff(params, Model.ESTIMATION)
    grid_taus = [t for t, _ in curve.points]
    interior = grid_taus[0] < curve.tau_opt < grid_taus[-1]
    gap = throughput_ideal_det(params) - curve.r_s_opt
    ok = interior and curve.r_s_opt > 0.0 and 0.0 <= gap <= 0.15
    yield ("tradeoff peak anchor", ok,
           f"tau_opt {curve.tau_opt * 1e3:.3f} ms, gap {gap:.4f}",
           "interior peak, gap in [0, 0.15]")

    # 9: fading power ordering in m, capped by the deterministic channel
    p_prev = 0.0
    ok = True
    values = []
    for m in (0.5, 1.0, 2.0, 5.0):
        links = default_fading(params, m)
        p_m = controlled_power_fading(params, links.pr_st, tau_ref).p_cont
        values.append(p_m)
        ok = ok and p_m > p_prev
        p_prev = p_m
    ok = ok and p_prev < pc.p_cont
    yield ("fading power monotone in m", ok,
           ", ".join(f"{linear_to_db(v):.2f}" for v in values) + " dBm",
           "increasing, below det")

    # 10: fading outage against simulation
    links = default_fading(params, 1.0)
    pcf = controlled_power_fading(params, links.pr_st, tau_ref)
    mcf = montecarlo.run_trials_fading(params, links, tau_ref, mc_small,
                                       seed + 1, jobs=jobs)
    gap = abs(mcf.outage_rate - params.rho_out)
    ok = gap <= 4.0 * mcf.outage_se and pcf.regime is not None
    yield ("outage self-consistency (fading)", ok, f"mc gap {gap:.2e}",
           f"<= 4 se ({4.0 * mcf.outage_se:.2e})")

    # 11: fading throughput against simulation
    r_analytic = throughput_fading(params, links, tau_ref)
    gap = abs(mcf.mean_throughput - r_analytic)
    ok = gap <= 4.0 * mcf.throughput_se
    yield ("throughput vs simulation (fading)", ok, f"gap {gap:.2e}",
           f"<= 4 se ({4.0 * mcf.throughput_se:.2e})")

    # 12: the forced window without power control really hits the target
    p_probe = replace(params, gamma=db_to_linear(-12.0))
    tau_f, _ = throughput_no_pc_det(p_probe)
    if math.isnan(tau_f):
        yield ("no-control calibration", False, "no forced window", "exists")
    else:
        resid = abs(outage_det(p_probe, tau_f, p_probe.p_full) - p_probe.rho_out)
        mc_npc = montecarlo.run_trials_det(p_probe, tau_f, mc_small, seed + 2,
                                           fixed_power=p_probe.p_full, jobs=jobs)
        gap = abs(mc_npc.outage_rate - p_probe.rho_out)
        ok = resid <= 1e-3 and gap <= 4.0 * mc_npc.outage_se
        yield ("no-control calibration", ok,
               f"tau {tau_f * 1e3:.3f} ms, residual {resid:.1e}, mc gap {gap:.2e}",
               f"<= 1e-3 and <= 4 se ({4.0 * mc_npc.outage_se:.2e})")


def cmd_validate(cfg: ScenarioConfig, stream=None) -> int:
    stream = stream or sys.stdout
    passed = failed = 0
    for name, ok, measured, tolerance in _validate_checks(cfg):
        status = "PASS" if ok else "FAIL"
        if ok:
            passed += 1
        else:
            failed += 1
        print(f"check {passed + failed:2d}  {status}  {name:38s} "
              f"{measured}  [{tolerance}]", file=stream)
    total = passed + failed
    verdict = "PASS" if failed == 0 else "FAIL"
    print(f"validate: {verdict} ({passed}/{total} checks)", file=stream)
    return 0 if failed == 0 else 1


def _load_config(args) -> ScenarioConfig:
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        cfg = parse_config(text)
    else:
        cfg = default_config()
    for assignment in args.set or []:
        apply_set(cfg, assignment)
    if args.seed is not None:
        cfg.sections["mc"]["seed"] = str(args.seed)
    if args.trials is not None:
        cfg.sections["mc"]["trials"] = str(args.trials)
    if args.jobs is not None:
        cfg.sections["mc"]["jobs"] = str(args.jobs)
    cfg.validate()
    return cfg


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI file; defaults are built in")
    sub.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                     help="override one setting; repeatable")
    sub.add_argument("--seed", type=int, help="override mc.seed")
    sub.add_argument("--trials", type=int, help="override mc.trials")
    sub.add_argument("--jobs", type=int, help="override mc.jobs")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="underlaysim",
        description="Underlay spectrum sharing under imperfect channel knowledge")
    parser.add_argument("--version", action="version",
                        version=f"underlaysim {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_fig = subs.add_parser("figure", help="write one figure's data as CSV")
    p_fig.add_argument("fig_id", choices=FIGURE_IDS, metavar="FIG",
                       help=f"one of: {', '.join(FIGURE_IDS)}")
    p_fig.add_argument("--out", required=True, help="output CSV path")
    _add_common(p_fig)

    p_val = subs.add_parser("validate", help="run the built-in check suite")
    _add_common(p_val)

    p_sweep = subs.add_parser("sweep", help="tabulate power control over a grid")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    _add_common(p_sweep)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "figure":
            cmd_figure(args.fig_id, cfg, args.out)
            return 0
        if args.command == "validate":
            return cmd_validate(cfg)
        cmd_sweep(cfg, args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (specfun.BracketError, specfun.ConvergenceError, ValueError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
