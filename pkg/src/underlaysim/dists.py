"""Probability layer: estimator laws and the quantities built from them.

The secondary transmitter never sees true channel gains, only short-window
estimates. Three estimates drive everything downstream, and all three are
scaled noncentral chi-square laws:

- received primary power at the ST, from an energy estimate over tau * f_s
  samples (dof = sample count, noncentrality = sample count * receive SNR),
- the ST-SR channel gain, from pilot-aided ML estimation (2 degrees of
  freedom, one complex observation),
- interference-plus-noise power at the SR, again an energy estimate.

Each law carries a two-moment gamma surrogate (gamma_match) that the
power-control and throughput layers treat as the working approximation; the
exact laws remain available for sampling so the surrogates can be checked
against them. The estimated capacity log2(1 + gain * P / interference) then
has a closed density through the ratio of the two gamma surrogates, which is
a scaled beta-prime law.

Nakagami-m fading enters as a gamma law on channel power gains; m >= 0.5,
with large m approaching the deterministic channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import specfun

__all__ = [
    "NcChiSq",
    "GammaApprox",
    "NakagamiGain",
    "CapacityDist",
    "gamma_match",
    "estimator_cdf",
    "sample_ncx2",
    "received_power_law",
    "pilot_gain_law",
    "interference_power_law",
    "capacity_pdf",
    "capacity_cdf",
    "capacity_survival",
    "nakagami_gain_cdf",
    "nakagami_gain_quantile",
    "sample_nakagami",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class NcChiSq:
    """Scaled noncentral chi-square law: noise_scale times chi2_dof(nc).

    Mean noise_scale * (dof + noncentrality), variance noise_scale^2 *
    (2 dof + 4 noncentrality). noise_scale carries the physical power units;
    dof and noncentrality are dimensionless.
    """

    dof: int
    noncentrality: float
    noise_scale: float

    def __post_init__(self) -> None:
        if self.dof < 1:
            raise ValueError("dof must be a positive integer")
        if not (self.noncentrality >= 0.0 and math.isfinite(self.noncentrality)):
            raise ValueError("noncentrality must be finite and nonnegative")
        if not (self.noise_scale > 0.0 and math.isfinite(self.noise_scale)):
            raise ValueError("noise_scale must be finite and positive")

    @property
    def mean(self) -> float:
        return self.noise_scale * (self.dof + self.noncentrality)

    @property
    def variance(self) -> float:
        return self.noise_scale ** 2 * (2.0 * self.dof + 4.0 * self.noncentrality)


@dataclass(frozen=True)
class GammaApprox:
    """Gamma(shape, scale) surrogate for an estimator law."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            raise ValueError("shape must be finite and positive")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError("scale must be finite and positive")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2


@dataclass(frozen=True)
class NakagamiGain:
    """Channel power-gain law under Nakagami-m fading: Gamma(m, mean/m)."""

    m: float
    mean_gain: float

    def __post_init__(self) -> None:
        if not (self.m >= 0.5 and math.isfinite(self.m)):
            raise ValueError("Nakagami parameter m must be at least 0.5")
        if not (self.mean_gain > 0.0 and math.isfinite(self.mean_gain)):
            raise ValueError("mean_gain must be finite and positive")


@dataclass(frozen=True)
class CapacityDist:
    """Law of the estimated capacity log2(1 + gain * P / interference).

    gain_approx and interf_approx are the gamma surrogates of the pilot
    gain estimate and of the interference-plus-noise power estimate;
    tx_power is the secondary transmit power applied to the gain. The SINR
    estimate gain * P / interference is then ratio_scale times a beta-prime
    variate with parameters (gain_approx.shape, interf_approx.shape).
    """

    gain_approx: GammaApprox
    interf_approx: GammaApprox
    tx_power: float

    def __post_init__(self) -> None:
        if not (self.tx_power > 0.0 and math.isfinite(self.tx_power)):
            raise ValueError("tx_power must be finite and positive")

    @property
    def ratio_scale(self) -> float:
        return self.gain_approx.scale * self.tx_power / self.interf_approx.scale


def gamma_match(law: NcChiSq) -> GammaApprox:
    """Two-moment gamma surrogate of a scaled noncentral chi-square law.

    shape = (dof + nc)^2 / (2 dof + 4 nc),
    scale = noise_scale * (2 dof + 4 nc) / (dof + nc).
    """
    total = law.dof + law.noncentrality
    spread = 2.0 * law.dof + 4.0 * law.noncentrality
    return GammaApprox(shape=total * total / spread,
                       scale=law.noise_scale * spread / total)


def estimator_cdf(approx: GammaApprox, x):
    """CDF of a gamma surrogate at x (scalar or array), x >= 0 required."""
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr < 0.0):
        raise ValueError("x must be finite and nonnegative")
    out = 1.0 - specfun.reg_upper_gamma(approx.shape, x_arr / approx.scale)
    if np.isscalar(x):
        return float(out)
    return out


# One chunk of standard normals at a time keeps the sampler's memory flat
# regardless of dof * n; 2**22 doubles is 32 MiB.
_CHUNK_NORMALS = 1 << 22


def _shifted_square_sums(rng: np.random.Generator, dof: int, delta,
                         noise_scale: float, n: int) -> np.ndarray:
    """Rows of noise_scale * sum_k (delta + z_k)^2 with z_k iid N(0, 1).

    delta is a scalar or a length-n array (per-row mean shift). The chunk
    boundaries depend only on (dof, n), so a fixed generator state yields a
    fixed output.
    """
    out = np.empty(n)
    rows_per_chunk = max(1, _CHUNK_NORMALS // dof)
    delta_arr = None if np.isscalar(delta) else np.asarray(delta, dtype=float)
    for start in range(0, n, rows_per_chunk):
        stop = min(start + rows_per_chunk, n)
        z = rng.standard_normal((stop - start, dof))
        if delta_arr is None:
            z += delta
        else:
            z += delta_arr[start:stop, None]
        out[start:stop] = noise_scale * np.einsum("ij,ij->i", z, z)
    return out


def sample_ncx2(law: NcChiSq, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n variates from the exact law through its signal model.

    Each variate is noise_scale * sum of dof squared unit Gaussians shifted
    by sqrt(noncentrality / dof), i.e. exactly noise_scale * chi2 with the
    law's dof and noncentrality. Sampling goes through the per-sample sum
    rather than a closed-form generator so the draws exercise the same
    accumulation the estimators perform.
    """
    if n < 1:
        raise ValueError("n must be positive")
    delta = math.sqrt(law.noncentrality / law.dof)
    return _shifted_square_sums(rng, law.dof, delta, law.noise_scale, n)


def received_power_law(snr: float, n_samples: int, noise_power: float) -> NcChiSq:
    """Law of the received primary-power estimate at the ST.

    An energy estimate over n_samples samples of a signal at receive SNR
    snr in noise of power noise_power: (noise_power / n) * chi2_n(n * snr).
    Mean noise_power * (1 + snr), so the estimate sits on the physical
    power scale.
    """
    if not (snr >= 0.0 and math.isfinite(snr)):
        raise ValueError("snr must be finite and nonnegative")
    if not (noise_power > 0.0 and math.isfinite(noise_power)):
        raise ValueError("noise_power must be finite and positive")
    n = int(n_samples)
    if n < 1:
        raise ValueError("n_samples must be a positive integer")
    return NcChiSq(dof=n, noncentrality=n * snr, noise_scale=noise_power / n)


def pilot_gain_law(mean_gain: float, pilot_samples: int, noise_power: float) -> NcChiSq:
    """Law of the pilot-aided channel power-gain estimate.

    ML estimation from pilot_samples pilot samples leaves one complex
    Gaussian observation around the true coefficient, so the squared
    magnitude is (noise_power / pilot_samples) * chi2_2(lambda) with
    lambda = pilot_samples * mean_gain / noise_power.
    """
    if not (mean_gain > 0.0 and math.isfinite(mean_gain)):
        raise ValueError("mean_gain must be finite and positive")
    if not (noise_power > 0.0 and math.isfinite(noise_power)):
        raise ValueError("noise_power must be finite and positive")
    k = int(pilot_samples)
    if k < 1:
        raise ValueError("pilot_samples must be a positive integer")
    return NcChiSq(dof=2, noncentrality=k * mean_gain / noise_power,
                   noise_scale=noise_power / k)


def interference_power_law(gain: float, tx_power: float, n_samples: int,
                           noise_power: float) -> NcChiSq:
    """Law of the interference-plus-noise power estimate at the SR.

    Energy estimate over n_samples of the primary transmitter's signal
    received through power gain gain at transmit power tx_power:
    (noise_power / n) * chi2_n(n * gain * tx_power / noise_power), with
    mean gain * tx_power + noise_power.
    """
    if not (gain >= 0.0 and math.isfinite(gain)):
        raise ValueError("gain must be finite and nonnegative")
    if not (tx_power > 0.0 and math.isfinite(tx_power)):
        raise ValueError("tx_power must be finite and positive")
    if not (noise_power > 0.0 and math.isfinite(noise_power)):
        raise ValueError("noise_power must be finite and positive")
    n = int(n_samples)
    if n < 1:
        raise ValueError("n_samples must be a positive integer")
    return NcChiSq(dof=n, noncentrality=n * gain * tx_power / noise_power,
                   noise_scale=noise_power / n)


def _ratio_params(dist: CapacityDist) -> tuple[float, float, float]:
    return dist.gain_approx.shape, dist.interf_approx.shape, dist.ratio_scale


def _log_sinr_from_capacity(t):
    """ln(2^x - 1) given t = x ln 2, elementwise, without overflow.

    Small t goes through expm1 directly; large t through
    t + log1p(-exp(-t)), so neither branch ever sees exp of a large
    argument. t = 0 yields -inf (caller silences the divide warning
    when that is a legitimate input).
    """
    t_lo = np.minimum(t, 1.0)
    t_hi = np.maximum(t, 1.0)
    return np.where(t < 1.0, np.log(np.expm1(t_lo)),
                    t_hi + np.log1p(-np.exp(-t_hi)))


def capacity_pdf(dist: CapacityDist, x):
    """Density of the estimated capacity at x > 0 (scalar or array).

    With Z = SINR estimate = lam * BetaPrime(a_s, a_i), lam = ratio_scale:

        ln f_Z(z) = -ln lam - ln B(a_s, a_i)
                    + (a_s - 1) ln(z / lam) - (a_s + a_i) ln(1 + z / lam)

    and f_C(x) = f_Z(2^x - 1) * 2^x ln 2. Evaluated fully in log space so
    the far tails underflow to zero instead of overflowing: with
    ln u = ln z - ln lam, the ln(1 + u) term becomes logaddexp(0, ln u)
    and 2^x rides along as +t inside the final exp.
    """
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr <= 0.0):
        raise ValueError("capacity argument must be finite and positive")
    a_s, a_i, lam = _ratio_params(dist)
    t = x_arr * _LN2
    ln_u = _log_sinr_from_capacity(t) - math.log(lam)
    log_pdf_z = (-math.log(lam) - special.betaln(a_s, a_i)
                 + (a_s - 1.0) * ln_u - (a_s + a_i) * np.logaddexp(0.0, ln_u))
    out = np.exp(log_pdf_z + t) * _LN2
    if np.isscalar(x):
        return float(out)
    return out


def capacity_cdf(dist: CapacityDist, x):
    """CDF of the estimated capacity; zero for x <= 0.

    The incomplete-beta argument z / (z + lam) is expit(ln u), exact for
    arbitrarily large z where the direct ratio would overflow.
    """
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("capacity argument must be finite")
    a_s, a_i, lam = _ratio_params(dist)
    t = np.maximum(x_arr, 0.0) * _LN2
    with np.errstate(divide="ignore"):
        ln_u = _log_sinr_from_capacity(t) - math.log(lam)
    out = special.betainc(a_s, a_i, special.expit(ln_u))
    if np.isscalar(x):
        return float(out)
    return out


def capacity_survival(dist: CapacityDist, x):
    """Survival function of the estimated capacity; one for x <= 0."""
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("capacity argument must be finite")
    a_s, a_i, lam = _ratio_params(dist)
    t = np.maximum(x_arr, 0.0) * _LN2
    with np.errstate(divide="ignore"):
        ln_u = _log_sinr_from_capacity(t) - math.log(lam)
    out = special.betaincc(a_s, a_i, special.expit(ln_u))
    if np.isscalar(x):
        return float(out)
    return out


def nakagami_gain_cdf(gain: NakagamiGain, x):
    """CDF of the power gain: regularized lower gamma(m, m x / mean)."""
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr < 0.0):
        raise ValueError("gain argument must be finite and nonnegative")
    out = special.gammainc(gain.m, gain.m * x_arr / gain.mean_gain)
    if np.isscalar(x):
        return float(out)
    return out


def nakagami_gain_quantile(gain: NakagamiGain, q):
    """Quantile of the power gain; q in [0, 1) (0 maps to gain 0)."""
    q_arr = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q_arr)) or np.any(q_arr < 0.0) or np.any(q_arr >= 1.0):
        raise ValueError("quantile level must lie in [0, 1)")
    out = special.gammaincinv(gain.m, q_arr) * (gain.mean_gain / gain.m)
    if np.isscalar(q):
        return float(out)
    return out


def sample_nakagami(gain: NakagamiGain, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n power gains: Gamma(m, mean/m), the exact law."""
    if n < 1:
        raise ValueError("n must be positive")
    return rng.gamma(shape=gain.m, scale=gain.mean_gain / gain.m, size=n)
