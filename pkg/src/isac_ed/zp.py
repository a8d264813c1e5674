"""Energy detection on the zero-padded guard of ZP-OFDM.

Three PD models are available:

* exact: the window energy is a sum of two Gamma variables (target-bearing
  samples and noise-only samples); valid without clutter, with
  Delta_s = 0 and 0 < L_t <= N_f.
* gamma: keeps only the target-bearing part; accurate when that part
  dominates (large sigma_R).
* gaussian: general moments for any shift and any clutter layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coincidence import CoincidenceCounts, coincidence_counts, detection_window, window_moments
from .distributions import (
    GammaParams,
    GaussianMoments,
    SumGammaParams,
    gamma_inv_cdf,
    gamma_sf,
    gaussian_inv_cdf,
    gaussian_sf,
    sum_gamma_cdf,
)
from .scene import ChannelScene, Hypothesis, UnifiedChannel, WaveformConfig, WaveformKind

MODELS = ("exact", "gamma", "gaussian")


class PreconditionError(ValueError):
    """The requested analytic model does not apply to this scene."""


def _require_zp(wf: WaveformConfig) -> None:
    if wf.kind is not WaveformKind.ZP:
        raise ValueError("ZP detector needs a ZP waveform")


def zp_window(wf: WaveformConfig) -> tuple[int, int]:
    """(start, length) of the ZP energy window: (N_f + Delta_s, N_zp - Delta_s)."""
    _require_zp(wf)
    return detection_window(wf)


@dataclass(frozen=True)
class ZpEnergySplit:
    """Target-bearing and noise-only parts of the ZP window energy.

    ``noise_part`` is None when the echo fills the whole window.
    """

    signal_part: GammaParams
    noise_part: GammaParams | None

    @property
    def occupied(self) -> int:
        return int(self.signal_part.shape)


def _check_split_preconditions(scene: ChannelScene, wf: WaveformConfig) -> None:
    _require_zp(wf)
    if wf.sample_shift != 0:
        raise PreconditionError("energy split needs sample_shift = 0")
    if scene.clutter_power_ratio > 0:
        raise PreconditionError("energy split does not model clutter")
    if not 0 < scene.target_delay <= wf.fft_size:
        raise PreconditionError(
            f"energy split needs 0 < L_t <= N_f, got L_t={scene.target_delay}")


def energy_split(scene: ChannelScene, wf: WaveformConfig) -> ZpEnergySplit:
    """Gamma laws of the target-bearing and noise-only window energies.

    k_t = min(L_t, N_zp), theta_t = (eta |h_t|^2 + sigma^2) / N_zp and
    k_w = N_zp - k_t, theta_w = sigma^2 / N_zp.

    Raises:
        PreconditionError: with clutter, a nonzero shift or L_t outside (0, N_f].
    """
    _check_split_preconditions(scene, wf)
    nz = wf.guard_size
    s2 = scene.noise_power
    k_t = min(scene.target_delay, nz)
    signal = GammaParams(k_t, (wf.eta * scene.effective_target_gain_sq + s2) / nz)
    noise = GammaParams(nz - k_t, s2 / nz) if k_t < nz else None
    return ZpEnergySplit(signal, noise)


def pd_exact(lam: float, scene: ChannelScene, wf: WaveformConfig) -> float:
    """Exact P(Z > lam) from the sum of the two Gamma parts."""
    split = energy_split(scene, wf)
    if split.noise_part is None:
        return gamma_sf(lam, split.signal_part)
    if split.signal_part.scale == split.noise_part.scale:
        merged = GammaParams(wf.guard_size, split.signal_part.scale)
        return gamma_sf(lam, merged)
    cdf = sum_gamma_cdf(lam, SumGammaParams(split.signal_part, split.noise_part))
    return 1.0 - cdf


def sigma_ratio(scene: ChannelScene, wf: WaveformConfig) -> float:
    """Std ratio between target-bearing and noise-only energies (inf if no noise part)."""
    split = energy_split(scene, wf)
    if split.noise_part is None:
        return math.inf
    t, w = split.signal_part, split.noise_part
    return math.sqrt(t.scale ** 2 * t.shape / (w.scale ** 2 * w.shape))


def pd_gamma(lam: float, scene: ChannelScene, wf: WaveformConfig) -> float:
    """Gamma approximation: P(E_t > lam), ignoring the noise-only samples."""
    return gamma_sf(lam, energy_split(scene, wf).signal_part)


# ---------------------------------------------------------------------------
# Counting formulas


def count_mean_zp(delay: int, wf: WaveformConfig) -> int:
    """Closed form for the number of window samples carrying a path of this delay.

    Valid for delays in [0, N); enumeration covers longer delays.
    """
    _require_zp(wf)
    nf, nz, ds = wf.fft_size, wf.guard_size, wf.sample_shift
    if ds < delay - nz - nf:
        return -ds
    return max(min(-ds + min(delay, nz), min(-delay + nz, 0) + nf), 0)


def count_cov_zp(delay_j: int, delay_jp: int, wf: WaveformConfig) -> int:
    """Reference closed form for the cross-path covariance count C_{j,j'}.

    Kept for auditing only: it does not depend on the later delay beyond
    the N_f - L_j' clamp and disagrees with enumeration for most delay
    pairs (see the conformance report). The moment computations use
    :func:`oracle_counts_zp`.
    """
    _require_zp(wf)
    if delay_j >= delay_jp:
        raise ValueError("count_cov_zp needs delay_j < delay_jp (j before j')")
    nf, nz, ds = wf.fft_size, wf.guard_size, wf.sample_shift
    return min(max(nz + delay_j + min(-ds, nf - delay_jp, 0), 0),
               max(delay_j, min(ds, nf - delay_j), 0))


def oracle_counts_zp(channel: UnifiedChannel, wf: WaveformConfig) -> CoincidenceCounts:
    """Enumerated mean and covariance counts for every path of the channel."""
    _require_zp(wf)
    return coincidence_counts(wf, channel.delays)


# ---------------------------------------------------------------------------
# Gaussian model


def gaussian_moments_zp(scene: ChannelScene, wf: WaveformConfig,
                        convention: str = "exact") -> GaussianMoments:
    """Mean and variance of the ZP window energy for any shift and clutter.

    Args:
        scene: Scene (its hypothesis decides whether the target is present).
        wf: ZP waveform.
        convention: ``exact`` (default) or ``pairwise`` covariance counting,
            see :meth:`CoincidenceCounts.covariance_counts`.
    """
    _require_zp(wf)
    mean, var, _ = window_moments(scene.unified_channel(), wf, scene.noise_power, convention)
    return GaussianMoments(mean, var)


def pd_gaussian_zp(lam: float, scene: ChannelScene, wf: WaveformConfig,
                   convention: str = "exact") -> float:
    """Gaussian approximation of P(Z > lam | H1)."""
    return gaussian_sf(lam, gaussian_moments_zp(scene.under(Hypothesis.H1), wf, convention))


def interference_free(scene: ChannelScene, wf: WaveformConfig) -> bool:
    """True when no RSI or clutter sample falls inside the ZP window."""
    counts = coincidence_counts(wf, scene.unified_channel().delays)
    gains = scene.unified_channel().gains
    return all(g == 0 or c == 0 for g, c in zip(gains[:-1], counts.mean_counts[:-1]))


def _h0_law(scene: ChannelScene, wf: WaveformConfig, model: str):
    """H0 law used for PFA: Gamma when the window is noise only, else Gaussian."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    h0 = scene.under(Hypothesis.H0)
    if model != "gaussian" and interference_free(h0, wf):
        _, length = zp_window(wf)
        return GammaParams(length, scene.noise_power / length)
    return gaussian_moments_zp(h0, wf)


def pfa_zp(lam: float, scene: ChannelScene, wf: WaveformConfig, model: str = "exact") -> float:
    """P(Z > lam | H0) under the selected model."""
    law = _h0_law(scene, wf, model)
    if isinstance(law, GammaParams):
        return gamma_sf(lam, law)
    return gaussian_sf(lam, law)


def threshold_for_pfa_zp(pfa: float, scene: ChannelScene, wf: WaveformConfig,
                         model: str = "exact") -> float:
    """CFAR threshold achieving ``pfa`` under the selected H0 law."""
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    law = _h0_law(scene, wf, model)
    if isinstance(law, GammaParams):
        return gamma_inv_cdf(1.0 - pfa, law)
    return gaussian_inv_cdf(1.0 - pfa, law)


def pd_zp(lam: float, scene: ChannelScene, wf: WaveformConfig, model: str) -> float:
    """PD under a named model; exact/gamma raise PreconditionError when inapplicable."""
    h1 = scene.under(Hypothesis.H1)
    if model == "exact":
        return pd_exact(lam, h1, wf)
    if model == "gamma":
        return pd_gamma(lam, h1, wf)
    if model == "gaussian":
        return pd_gaussian_zp(lam, h1, wf)
    raise ValueError(f"unknown model {model!r}")
