"""Outage-constrained transmit power control for the secondary link.

The secondary transmitter (ST) estimates the power received from the primary
receiver's (PR) transmissions over a sensing window of tau seconds, converts
that estimate into an implied ST-to-PR channel gain, and picks the largest
transmit power whose estimate-conditioned interference at the PR stays below
the threshold theta_i except with probability rho_out. Two regimes fall out:

- interference-limited: the outage constraint binds and the controlled power
  sits strictly below the hardware ceiling p_full;
- power-limited: even at p_full the constraint holds, so the ceiling binds.

The boundary between the regimes, as a function of the PR-to-ST receive SNR
gamma, is the operating bound solved by perf_bound_det / perf_bound_fading:
above the bound the system is interference-limited, below it power-limited.
The bound only exists once the sensing window holds enough samples for the
estimator's upper tail to pin down the outage level; for shorter windows the
root search reports a missing bracket rather than a clamped value.

Fading variants average the outage over the Nakagami-m law of the PR-ST
power gain; gamma then plays the role of the mean receive SNR.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import dists, specfun
from .dists import NakagamiGain
from .specfun import DEFAULT_TOL, Tolerance

__all__ = [
    "db_to_linear",
    "linear_to_db",
    "ScenarioParams",
    "Regime",
    "PowerControlResult",
    "FadingLinks",
    "default_fading",
    "samples_for",
    "outage_det",
    "controlled_power_det",
    "perf_bound_det",
    "perf_bound_asymptote",
    "outage_fading",
    "controlled_power_fading",
    "perf_bound_fading",
]


def db_to_linear(value_db: float) -> float:
    """Convert a dB (or dBm) quantity to its linear value."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a positive linear quantity to dB."""
    if not (value > 0.0):
        raise ValueError("only positive values have a dB representation")
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class ScenarioParams:
    """Physical scenario, all quantities linear: powers in mW, times in s.

    Field defaults are the reference scenario used throughout: 1 MHz
    sampling, -100 dBm noise, 0 dBm primary powers, -110 dBm interference
    threshold, 10 percent outage budget, 0 dBm power ceiling, 100 ms frame,
    10 us pilot, 0 dB PR-ST receive SNR, -100 dB PT-SR gain and -80 dB
    ST-SR gain.

    gamma is the receive SNR of the PR's transmissions at the ST (mean SNR
    under fading); g_pt_sr and g_st_sr are channel power gains of the
    interfering and the useful secondary link.
    """

    f_s: float = 1e6
    sigma2: float = 1e-10
    p_tx_pr: float = 1.0
    p_tx_pt: float = 1.0
    theta_i: float = 1e-11
    rho_out: float = 0.10
    p_full: float = 1.0
    frame_len: float = 0.100
    tau_p: float = 1e-5
    gamma: float = 1.0
    g_pt_sr: float = 1e-10
    g_st_sr: float = 1e-8

    def __post_init__(self) -> None:
        positive = {
            "f_s": self.f_s, "sigma2": self.sigma2, "p_tx_pr": self.p_tx_pr,
            "p_tx_pt": self.p_tx_pt, "theta_i": self.theta_i,
            "p_full": self.p_full, "frame_len": self.frame_len,
            "tau_p": self.tau_p, "gamma": self.gamma, "g_st_sr": self.g_st_sr,
        }
        for name, value in positive.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and positive")
        if not (0.0 < self.rho_out < 1.0):
            raise ValueError("rho_out must lie strictly in (0, 1)")
        if not (self.g_pt_sr >= 0.0 and math.isfinite(self.g_pt_sr)):
            raise ValueError("g_pt_sr must be finite and nonnegative")
        if self.tau_p >= self.frame_len:
            raise ValueError("pilot time must be shorter than the frame")

    @property
    def pilot_samples(self) -> int:
        return samples_for(self.tau_p, self.f_s)


class Regime(enum.Enum):
    INTERFERENCE_LIMITED = "interference-limited"
    POWER_LIMITED = "power-limited"


@dataclass(frozen=True)
class PowerControlResult:
    """Controlled power, the binding regime, and the effective sensing time.

    tau_eff is the requested tau rounded to a whole number of samples; the
    estimator laws see tau_eff while time budgets elsewhere keep the
    requested tau.
    """

    p_cont: float
    regime: Regime
    tau_eff: float


class FadingLinks(NamedTuple):
    """Nakagami gain laws of the three links that matter."""

    pr_st: NakagamiGain
    pt_sr: NakagamiGain
    st_sr: NakagamiGain


def default_fading(params: ScenarioParams, m: float) -> FadingLinks:
    """Fading laws whose mean gains reproduce the scenario's link budget."""
    if params.g_pt_sr <= 0.0:
        raise ValueError("fading links need a positive PT-SR gain")
    return FadingLinks(
        pr_st=NakagamiGain(m, params.gamma * params.sigma2 / params.p_tx_pr),
        pt_sr=NakagamiGain(m, params.g_pt_sr),
        st_sr=NakagamiGain(m, params.g_st_sr),
    )


def samples_for(tau: float, f_s: float) -> int:
    """Whole samples in a window of tau seconds at rate f_s."""
    if not (tau > 0.0 and math.isfinite(tau)):
        raise ValueError("tau must be finite and positive")
    n = round(tau * f_s)
    if n < 1:
        raise ValueError("sensing window shorter than one sample")
    return n


def _check_tau(params: ScenarioParams, tau: float) -> None:
    if not (0.0 < tau < params.frame_len - params.tau_p):
        raise ValueError("tau must leave room for the pilot inside the frame")


def _surrogate_ab(n_eff, snr, noise_power):
    """Gamma-surrogate (shape, scale) of the power estimate, continuous n.

    Matches gamma_match(received_power_law(snr, n, noise)) when n_eff is an
    integer; accepts arrays in snr for the fading integrals and a real
    n_eff for root searches over the window length.
    """
    total = 1.0 + snr
    spread = 2.0 + 4.0 * snr
    a = n_eff * total * total / spread
    b = noise_power * spread / (n_eff * total)
    return a, b


def _interference_threshold(params: ScenarioParams, p: float) -> float:
    # receive-power level at the ST above which the implied PR-ST gain
    # would push interference p * gain past theta_i
    return params.theta_i * params.p_tx_pr / p + params.sigma2


def outage_det(params: ScenarioParams, tau: float, p: float) -> float:
    """Interference-outage probability at transmit power p, known-gamma case.

    Pure estimator physics: any positive window holding at least one
    sample is accepted, whether or not it fits a transmission frame.
    """
    if not (p > 0.0 and math.isfinite(p)):
        raise ValueError("transmit power must be finite and positive")
    n = samples_for(tau, params.f_s)
    law = dists.received_power_law(params.gamma, n, params.sigma2)
    ga = dists.gamma_match(law)
    thr = _interference_threshold(params, p)
    return specfun.reg_upper_gamma(ga.shape, thr / ga.scale)


def controlled_power_det(params: ScenarioParams, tau: float,
                         tol: Tolerance = DEFAULT_TOL) -> PowerControlResult:
    """Largest admissible transmit power for a deterministic PR-ST channel.

    Closed form: the outage constraint inverts through the gamma surrogate
    of the receive-power estimate, and the result is capped at p_full. The
    regime label records which of the two bound.
    """
    _check_tau(params, tau)
    n = samples_for(tau, params.f_s)
    law = dists.received_power_law(params.gamma, n, params.sigma2)
    ga = dists.gamma_match(law)
    tau_eff = n / params.f_s
    thr_full = _interference_threshold(params, params.p_full)
    if specfun.reg_upper_gamma(ga.shape, thr_full / ga.scale) <= params.rho_out:
        return PowerControlResult(params.p_full, Regime.POWER_LIMITED, tau_eff)
    # constraint binds below the ceiling; denominator is positive exactly
    # because the outage at p_full exceeded rho_out
    x = specfun.inv_reg_upper_gamma(params.rho_out, ga.shape)
    p_unc = params.theta_i * params.p_tx_pr / (ga.scale * x - params.sigma2)
    return PowerControlResult(p_unc, Regime.INTERFERENCE_LIMITED, tau_eff)


def perf_bound_det(params: ScenarioParams, tau: float,
                   bracket: tuple[float, float] = (1e-6, 1e3),
                   tol: Tolerance = DEFAULT_TOL) -> float:
    """Receive SNR separating the regimes, deterministic channel.

    Solves outage-at-p_full(gamma) = rho_out over the bracket. Raises
    specfun.BracketError when the window is too short for the bound to
    exist anywhere in the bracket. The window is not tied to a frame:
    the bound is a property of the estimator alone, so tau may exceed
    the frame length (useful for tracing the long-window asymptote).
    """
    samples_for(tau, params.f_s)

    def residual(gamma: float) -> float:
        return outage_det(replace(params, gamma=gamma), tau, params.p_full) - params.rho_out

    return specfun.find_root(residual, bracket[0], bracket[1], tol)


def perf_bound_asymptote(params: ScenarioParams) -> float:
    """Long-window limit of the regime bound: theta_i p_tx_pr / (p_full sigma2)."""
    return params.theta_i * params.p_tx_pr / (params.p_full * params.sigma2)


# Fading gain quantiles above 1 - 1e-8 contribute less than 1e-8 to the
# outage average and the quantile map steepens without bound there.
_QUANTILE_CAP = 1.0 - 1e-8


def _outage_fading_n(params: ScenarioParams, pr_st: NakagamiGain, n_eff: float,
                     p: float, tol: Tolerance) -> float:
    thr = _interference_threshold(params, p)
    snr_scale = params.p_tx_pr / params.sigma2

    def integrand(u: np.ndarray) -> np.ndarray:
        x = dists.nakagami_gain_quantile(pr_st, u)
        a, b = _surrogate_ab(n_eff, x * snr_scale, params.sigma2)
        return specfun.reg_upper_gamma(a, thr / b)

    return specfun.integrate(integrand, 0.0, _QUANTILE_CAP, tol)


def outage_fading(params: ScenarioParams, pr_st: NakagamiGain, tau: float,
                  p: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Interference-outage probability averaged over the PR-ST fading law.

    The gain average is taken in quantile space, which keeps the integrand
    bounded on a finite interval for every m and gain scale. Like the
    known-gamma variant this accepts any window of at least one sample.
    """
    if not (p > 0.0 and math.isfinite(p)):
        raise ValueError("transmit power must be finite and positive")
    n = samples_for(tau, params.f_s)
    return _outage_fading_n(params, pr_st, float(n), p, tol)


def controlled_power_fading(params: ScenarioParams, pr_st: NakagamiGain,
                            tau: float, tol: Tolerance = DEFAULT_TOL) -> PowerControlResult:
    """Largest admissible transmit power under PR-ST fading.

    No closed form here: the outage is monotone in the power, so the rule
    is a bracketed root in log power, capped at p_full.
    """
    _check_tau(params, tau)
    n = samples_for(tau, params.f_s)
    tau_eff = n / params.f_s

    def outage_at(p: float) -> float:
        return _outage_fading_n(params, pr_st, float(n), p, tol)

    if outage_at(params.p_full) <= params.rho_out:
        return PowerControlResult(params.p_full, Regime.POWER_LIMITED, tau_eff)
    p_lo = params.p_full
    for _ in range(80):
        p_lo /= 16.0
        if outage_at(p_lo) <= params.rho_out:
            break
    else:
        raise specfun.ConvergenceError("could not bracket the power rule from below")

    def residual(log_p: float) -> float:
        return outage_at(math.exp(log_p)) - params.rho_out

    log_root = specfun.find_root(residual, math.log(p_lo), math.log(params.p_full), tol)
    return PowerControlResult(math.exp(log_root), Regime.INTERFERENCE_LIMITED, tau_eff)


def perf_bound_fading(params: ScenarioParams, pr_st: NakagamiGain, tau: float,
                      bracket: tuple[float, float] = (1e-6, 1e3),
                      tol: Tolerance = DEFAULT_TOL) -> float:
    """Mean receive SNR separating the regimes under PR-ST fading.

    Only the m of pr_st is used; its mean gain is retied to the searched
    SNR through mean_gain = gamma * sigma2 / p_tx_pr at every step. Raises
    specfun.BracketError when no bound exists in the bracket. As in the
    deterministic variant, tau is not frame-bounded here.
    """
    n = samples_for(tau, params.f_s)

    def residual(gamma: float) -> float:
        law = NakagamiGain(pr_st.m, gamma * params.sigma2 / params.p_tx_pr)
        return (_outage_fading_n(params, law, float(n), params.p_full, tol)
                - params.rho_out)

    return specfun.find_root(residual, bracket[0], bracket[1], tol)
