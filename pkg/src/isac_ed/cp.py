"""Energy detection over a full CP-OFDM symbol.

The CP repetition and every delayed interference path make the per-sample
energies correlated. The Gamma model ignores that correlation; the
Gaussian model carries it through the coincidence counts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coincidence import CoincidenceCounts, coincidence_counts, window_moments
from .distributions import (
    GammaParams,
    GaussianMoments,
    gamma_inv_cdf,
    gamma_sf,
    gaussian_inv_cdf,
    gaussian_sf,
)
from .scene import ChannelScene, Hypothesis, UnifiedChannel, WaveformConfig, WaveformKind
from .zp import MODELS, PreconditionError


def _require_cp(wf: WaveformConfig) -> None:
    if wf.kind is not WaveformKind.CP:
        raise ValueError("CP detector needs a CP waveform")


@dataclass(frozen=True)
class CpMomentBreakdown:
    """Gaussian moments of the CP statistic and the covariance share.

    ``covariance_fraction`` is 1 - mean^2 / (N variance): the part of the
    variance that comes from correlated samples.
    """

    mean: float
    variance: float
    covariance_fraction: float

    @property
    def moments(self) -> GaussianMoments:
        return GaussianMoments(self.mean, self.variance)


def gamma_params_cp(scene: ChannelScene, wf: WaveformConfig) -> GammaParams:
    """Gamma(N, (|h_i|^2 + |h_t|^2 + sigma^2)/N), neglecting correlation.

    Raises:
        PreconditionError: when clutter is present.
    """
    _require_cp(wf)
    if scene.clutter_power_ratio > 0:
        raise PreconditionError("CP Gamma model does not apply with clutter")
    n = wf.total_size
    power = scene.rsi_gain_sq + scene.effective_target_gain_sq + scene.noise_power
    return GammaParams(n, power / n)


def pd_gamma_cp(lam: float, scene: ChannelScene, wf: WaveformConfig) -> float:
    """Gamma approximation of P(Z > lam | H1)."""
    return gamma_sf(lam, gamma_params_cp(scene.under(Hypothesis.H1), wf))


def count_cov_cp_self(delay: int, wf: WaveformConfig) -> int:
    """CP repetition pairs of one path: max(N_cp - L, 0) + max(L - N_f, 0), for L in [0, N)."""
    _require_cp(wf)
    return max(wf.guard_size - delay, 0) + max(delay - wf.fft_size, 0)


def count_cov_cp_cross(delay_j: int, delay_jp: int, wf: WaveformConfig) -> int:
    """Reference five-term closed form for the cross-path count C_{j,j'}.

    Read with the guard written as N_cp and the single-argument
    min(N_f - L_j') taken as N_f - L_j'. Audited against
    :func:`cp_stream_oracle`; moments use the oracle values.
    """
    _require_cp(wf)
    if delay_j > delay_jp:
        raise ValueError("count_cov_cp_cross needs delay_j <= delay_jp")
    nf, ncp = wf.fft_size, wf.guard_size
    n = wf.total_size
    lj, ljp = delay_j, delay_jp
    return (min(n - ljp, ncp) + max(nf - ljp, 0) + 2 * max(ncp - ljp, 0)
            + max(min(2 * (ncp - lj) + nf - ljp, ncp - lj), 0) + lj)


def cp_stream_oracle(channel: UnifiedChannel, wf: WaveformConfig) -> CoincidenceCounts:
    """Enumerated self and cross coincidence counts over the CP symbol."""
    _require_cp(wf)
    return coincidence_counts(wf, channel.delays)


def gaussian_moments_cp(scene: ChannelScene, wf: WaveformConfig,
                        convention: str = "exact") -> CpMomentBreakdown:
    """Mean, variance and covariance share of the CP statistic."""
    _require_cp(wf)
    mean, var, _ = window_moments(scene.unified_channel(), wf, scene.noise_power, convention)
    n = wf.total_size
    frac = 1.0 - mean * mean / (var * n)
    return CpMomentBreakdown(mean, var, min(1.0, max(0.0, frac)))


def pd_gaussian_cp(lam: float, scene: ChannelScene, wf: WaveformConfig,
                   convention: str = "exact") -> float:
    """Gaussian approximation of P(Z > lam | H1)."""
    m = gaussian_moments_cp(scene.under(Hypothesis.H1), wf, convention)
    return gaussian_sf(lam, m.moments)


def _h0_law(scene: ChannelScene, wf: WaveformConfig, model: str):
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    h0 = scene.under(Hypothesis.H0)
    if model == "gaussian":
        return gaussian_moments_cp(h0, wf).moments
    # there is no exact CP law; exact falls back to the Gamma model
    return gamma_params_cp(h0, wf)


def pfa_cp(lam: float, scene: ChannelScene, wf: WaveformConfig, model: str = "gaussian") -> float:
    """P(Z > lam | H0) under the selected model."""
    law = _h0_law(scene, wf, model)
    if isinstance(law, GammaParams):
        return gamma_sf(lam, law)
    return gaussian_sf(lam, law)


def threshold_for_pfa_cp(pfa: float, scene: ChannelScene, wf: WaveformConfig,
                         model: str = "gaussian") -> float:
    """CFAR threshold achieving ``pfa`` under the selected H0 law."""
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    law = _h0_law(scene, wf, model)
    if isinstance(law, GammaParams):
        return gamma_inv_cdf(1.0 - pfa, law)
    return gaussian_inv_cdf(1.0 - pfa, law)


def pd_cp(lam: float, scene: ChannelScene, wf: WaveformConfig, model: str) -> float:
    """PD under a named model (exact maps to gamma: no exact CP law exists)."""
    if model in ("exact", "gamma"):
        return pd_gamma_cp(lam, scene, wf)
    if model == "gaussian":
        return pd_gaussian_cp(lam, scene, wf)
    raise ValueError(f"unknown model {model!r}")
