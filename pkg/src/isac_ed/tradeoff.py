"""Decision-support analytics built on the ZP and CP detectors.

Covers the ZP upper bound over the guard size, required-SNR inversions,
PD-versus-distance curves, the CP/ZP range ratio and its equal-range RSI,
KLD clutter comparisons and approximation-model selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from . import cp, zp
from .distributions import (
    ConvergenceError,
    GammaParams,
    gamma_inv_cdf,
    gamma_sf,
    kld_gaussian,
)
from .montecarlo import pd_crossing_gain, simulate_components
from .scene import (
    ChannelScene,
    Hypothesis,
    SystemConfig,
    WaveformConfig,
    WaveformKind,
    build_scene,
    delay_bins,
    noise_power,
)


class InfeasibleQueryError(ValueError):
    """The requested operating point cannot be reached."""


def _check_probability(name: str, p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")


def _unit_quantile(x: float, k: int) -> float:
    return gamma_inv_cdf(x, GammaParams(k, 1.0))


# ---------------------------------------------------------------------------
# SNR inversions and distances


def snr_required(pd: float, pfa: float, k: int) -> float:
    """SNR that reaches ``pd`` at ``pfa`` when the statistic is Gamma with shape k.

    rho = F^-1(1 - pfa | k, 1) / F^-1(1 - pd | k, 1) - 1.

    Raises:
        InfeasibleQueryError: when pd <= pfa (no positive SNR exists).
    """
    _check_probability("pd", pd)
    _check_probability("pfa", pfa)
    if pd <= pfa:
        raise InfeasibleQueryError(f"pd={pd} must exceed pfa={pfa}")
    return _unit_quantile(1.0 - pfa, k) / _unit_quantile(1.0 - pd, k) - 1.0


def snr_required_zp(pd: float, pfa: float, n_zp: int) -> float:
    """ZP SNR eta |h_t|^2 / sigma^2 needed for (pd, pfa) with a full guard window."""
    return snr_required(pd, pfa, n_zp)


def snr_required_cp(pd: float, pfa: float, n: int) -> float:
    """CP SINR |h_t|^2 / (sigma^2 + |h_i|^2) needed for (pd, pfa) over N samples."""
    return snr_required(pd, pfa, n)


def range_from_snr(cfg: SystemConfig, snr: float, kind: WaveformKind | str,
                   rsi: float = 0.0, eta: float = 1.0) -> float:
    """Distance at which the link budget delivers ``snr``.

    CP: |h_t|^2 = snr sigma^2 (1 + rho_si). ZP: |h_t|^2 = snr sigma^2 / eta.
    """
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    s2 = noise_power(cfg)
    if WaveformKind(kind) is WaveformKind.CP:
        gain = snr * s2 * (1.0 + rsi)
    else:
        gain = snr * s2 / eta
    return (cfg.link_constant / gain) ** (1.0 / (2.0 * cfg.pathloss_exp))


# ---------------------------------------------------------------------------
# Range ratio


@dataclass(frozen=True)
class RangeQuery:
    """Operating point for the CP/ZP range comparison.

    Attributes:
        pd_target: Detection probability both systems must reach.
        pfa_target: False-alarm probability of both CFAR thresholds.
        fft_size: N_f.
        zp_size: N_zp of the ZP system.
        cp_size: N_cp of the CP system (defaults to N_zp).
        pathloss_exp: alpha.
        rsi: rho_si of the CP system (linear).
    """

    pd_target: float
    pfa_target: float
    fft_size: int
    zp_size: int
    cp_size: int | None = None
    pathloss_exp: float = 2.0
    rsi: float = 0.0

    def __post_init__(self):
        _check_probability("pd_target", self.pd_target)
        _check_probability("pfa_target", self.pfa_target)
        if self.cp_size is None:
            object.__setattr__(self, "cp_size", self.zp_size)
        if min(self.fft_size, self.zp_size, self.cp_size) < 1:
            raise ValueError("waveform sizes must be >= 1")
        if not self.rsi >= 0:
            raise ValueError(f"rsi must be >= 0, got {self.rsi}")
        if not self.pathloss_exp >= 1:
            raise ValueError("pathloss_exp must be >= 1")

    @property
    def eta(self) -> float:
        return (self.fft_size + self.zp_size) / self.fft_size

    @property
    def overhead(self) -> float:
        """N_zp / (N_f + N_zp)."""
        return self.zp_size / (self.fft_size + self.zp_size)

    @property
    def zp_waveform(self) -> WaveformConfig:
        return WaveformConfig(WaveformKind.ZP, self.fft_size, self.zp_size)

    @property
    def cp_waveform(self) -> WaveformConfig:
        return WaveformConfig(WaveformKind.CP, self.fft_size, self.cp_size)

    def with_rsi(self, rsi: float) -> "RangeQuery":
        return replace(self, rsi=rsi)


def _snr_pair(rq: RangeQuery) -> tuple[float, float]:
    rho_zp = snr_required_zp(rq.pd_target, rq.pfa_target, rq.zp_size)
    rho_cp = snr_required_cp(rq.pd_target, rq.pfa_target, rq.fft_size + rq.cp_size)
    return rho_zp, rho_cp


def zp_delay_for_query(rq: RangeQuery, cfg: SystemConfig) -> int:
    """Delay L_zp of the ZP range implied by the query under ``cfg``."""
    rho_zp, _ = _snr_pair(rq)
    cfg = replace(cfg, pathloss_exp=rq.pathloss_exp)
    return delay_bins(range_from_snr(cfg, rho_zp, WaveformKind.ZP, eta=rq.eta), cfg.bandwidth)


def delta_ratio(rq: RangeQuery, cfg: SystemConfig | None = None) -> float:
    """d_cp / d_zp at matched PD and PFA.

    delta = [rho_zp / (eta (1 + rho_si) rho_cp)]^(1 / (2 alpha)), independent of
    the link budget. With ``cfg`` the ZP delay implied by the query is checked
    against 0 < L_zp <= N_f, the range where the ZP inversion holds.

    Raises:
        zp.PreconditionError: when the ZP delay leaves (0, N_f].
    """
    rho_zp, rho_cp = _snr_pair(rq)
    if cfg is not None:
        l_zp = zp_delay_for_query(rq, cfg)
        if not 0 < l_zp <= rq.fft_size:
            raise zp.PreconditionError(
                f"ZP delay L_zp={l_zp} outside (0, {rq.fft_size}] for this query")
    ratio = rho_zp / (rq.eta * (1.0 + rq.rsi) * rho_cp)
    return ratio ** (1.0 / (2.0 * rq.pathloss_exp))


def equal_range_rsi(rq: RangeQuery) -> float:
    """rho_si (linear) at which delta = 1, in closed form.

    Raises:
        InfeasibleQueryError: when delta(0) <= 1, i.e. ZP already reaches at
            least as far as interference-free CP.
    """
    rho_zp, rho_cp = _snr_pair(rq)
    rsi = rho_zp / (rq.eta * rho_cp) - 1.0
    if rsi <= 0:
        raise InfeasibleQueryError(
            f"delta(0)={delta_ratio(rq.with_rsi(0.0)):.6g} <= 1: ZP range already matches CP")
    return rsi


def equal_range_rsi_bisect(rq: RangeQuery, lo: float = 1e-6, hi: float = 1e6,
                           tol: float = 1e-13) -> float:
    """delta(rho_si) = 1 by bisection in log rho_si (cross-check of the closed form)."""
    f = lambda r: delta_ratio(rq.with_rsi(r)) - 1.0  # noqa: E731
    if f(lo) <= 0 or f(hi) >= 0:
        raise InfeasibleQueryError("delta = 1 not bracketed by the RSI search interval")
    a, b = math.log(lo), math.log(hi)
    while b - a > tol:
        m = 0.5 * (a + b)
        if f(math.exp(m)) > 0:
            a = m
        else:
            b = m
    return math.exp(0.5 * (a + b))


# ---------------------------------------------------------------------------
# PD over distance


def zp_threshold(pfa: float, wf: WaveformConfig, s2: float) -> float:
    """Gamma CFAR threshold of the interference-free ZP window."""
    _, width = zp.zp_window(wf)
    return gamma_inv_cdf(1.0 - pfa, GammaParams(width, s2 / width))


def cp_threshold(pfa: float, wf: WaveformConfig, s2: float, rsi: float = 0.0) -> float:
    """Gamma CFAR threshold of the CP statistic with RSI and no clutter."""
    n = wf.total_size
    return gamma_inv_cdf(1.0 - pfa, GammaParams(n, s2 * (1.0 + rsi) / n))


def pd_zp_at_distance(cfg: SystemConfig, wf: WaveformConfig, distance: float, pfa: float,
                      model: str = "exact") -> float:
    """ZP PD of a clutter-free target at ``distance`` with a Gamma CFAR threshold.

    Delays beyond N_f (outside the split model) fall back to the Gaussian model.
    """
    scene = build_scene(cfg, wf, distance=distance)
    lam = zp_threshold(pfa, wf, scene.noise_power)
    if model != "gaussian" and not 0 < scene.target_delay <= wf.fft_size:
        model = "gaussian"
    return zp.pd_zp(lam, scene, wf, model)


def pd_cp_at_distance(cfg: SystemConfig, wf: WaveformConfig, distance: float, pfa: float,
                      rsi: float = 0.0, model: str = "gamma") -> float:
    """CP PD at ``distance`` with RSI and a Gamma CFAR threshold."""
    scene = build_scene(cfg, wf, distance=distance, rsi=rsi)
    lam = cp_threshold(pfa, wf, scene.noise_power, rsi)
    return cp.pd_cp(lam, scene, wf, model)


def pd_upper_bound(scene: ChannelScene, wf: WaveformConfig, pfa: float) -> float:
    """ZP PD with the guard sized to the target delay (N_zp = L_t).

    The whole window then carries the echo, so the statistic is
    Gamma(L_t, (eta |h_t|^2 + sigma^2) / L_t); the CFAR threshold is
    recomputed for the L_t-sample window. The power factor eta of ``wf`` is
    kept so the bound is compared at equal average transmit power.

    Raises:
        ValueError: when L_t is outside (0, N_f].
    """
    lt = scene.target_delay
    if not 0 < lt <= wf.fft_size:
        raise ValueError(f"upper bound needs 0 < L_t <= N_f, got L_t={lt}")
    s2 = scene.noise_power
    lam = gamma_inv_cdf(1.0 - pfa, GammaParams(lt, s2 / lt))
    g = scene.effective_target_gain_sq if scene.hypothesis is Hypothesis.H1 else 0.0
    return gamma_sf(lam, GammaParams(lt, (wf.eta * g + s2) / lt))


def pd_upper_bound_at_distance(cfg: SystemConfig, wf: WaveformConfig, distance: float,
                               pfa: float) -> float:
    return pd_upper_bound(build_scene(cfg, wf, distance=distance), wf, pfa)


def distance_at_pd(pd_of_distance: Callable[[float], float], pd: float,
                   lo: float, hi: float, tol: float = 1e-6) -> float:
    """Largest-range crossing of a PD-versus-distance curve by bisection.

    ``pd_of_distance`` must be above ``pd`` at ``lo`` and below it at ``hi``.
    """
    if not (pd_of_distance(lo) >= pd > pd_of_distance(hi)):
        raise InfeasibleQueryError(f"PD={pd} not bracketed on [{lo}, {hi}] m")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pd_of_distance(mid) >= pd:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Simulated range ratio


@dataclass(frozen=True)
class SimulatedRange:
    """Monte Carlo distances at which each system reaches the target PD."""

    rsi: float
    d_zp: float
    d_cp: float
    delay_zp: int
    delay_cp: int

    @property
    def ratio(self) -> float:
        return self.d_cp / self.d_zp


def _sim_distance(cfg: SystemConfig, wf: WaveformConfig, rsi: float, lam: float, pd: float,
                  guess: float, trials: int, seed: int, iters: int = 4) -> tuple[float, int]:
    """Distance where the empirical PD crosses ``pd``; the delay is iterated to a fixed point."""
    d = guess
    seen = set()
    for _ in range(iters):
        delay = delay_bins(d, cfg.bandwidth)
        if delay in seen:
            break
        seen.add(delay)
        scene = build_scene(cfg, wf, target_delay=max(delay, 1), rsi=rsi)
        comp = simulate_components(scene, wf, trials, seed)
        g = pd_crossing_gain(comp, lam, pd)
        d = (cfg.link_constant / g) ** (1.0 / (2.0 * cfg.pathloss_exp))
    return d, delay_bins(d, cfg.bandwidth)


def simulated_ranges(cfg: SystemConfig, rq: RangeQuery, rsis, trials: int = 20_000,
                     seed: int = 0) -> list[SimulatedRange]:
    """Monte Carlo d_cp / d_zp at the query's PD for each RSI, with Gamma CFAR thresholds.

    Each detector's empirical PD curve over target power is built from one
    set of draws; its PD crossing is mapped to distance through the link
    budget, and the delay is refined until it matches the distance. The ZP
    range does not depend on the RSI and is simulated once.
    """
    cfg = replace(cfg, pathloss_exp=rq.pathloss_exp)
    s2 = noise_power(cfg)
    rho_zp, _ = _snr_pair(rq)
    wz, wc = rq.zp_waveform, rq.cp_waveform
    d_zp, l_zp = _sim_distance(cfg, wz, 0.0, zp_threshold(rq.pfa_target, wz, s2), rq.pd_target,
                               range_from_snr(cfg, rho_zp, WaveformKind.ZP, eta=rq.eta),
                               trials, seed)
    out = []
    for rsi in rsis:
        q = rq.with_rsi(rsi)
        _, rho_cp = _snr_pair(q)
        d_cp, l_cp = _sim_distance(cfg, wc, rsi, cp_threshold(q.pfa_target, wc, s2, rsi),
                                   q.pd_target,
                                   range_from_snr(cfg, rho_cp, WaveformKind.CP, rsi=rsi),
                                   trials, seed + 1)
        out.append(SimulatedRange(rsi, d_zp, d_cp, l_zp, l_cp))
    return out


def simulated_range_ratio(cfg: SystemConfig, rq: RangeQuery, trials: int = 20_000,
                          seed: int = 0) -> SimulatedRange:
    """Single-RSI form of :func:`simulated_ranges` using ``rq.rsi``."""
    return simulated_ranges(cfg, rq, [rq.rsi], trials, seed)[0]


# ---------------------------------------------------------------------------
# Clutter: KLD comparison


def kld_compare(scene_zp: ChannelScene, scene_cp: ChannelScene, wf_zp: WaveformConfig,
                wf_cp: WaveformConfig, convention: str = "exact") -> tuple[float, float]:
    """D(H0 || H1) in nats for the Gaussian laws of the ZP and CP statistics."""
    kz = kld_gaussian(zp.gaussian_moments_zp(scene_zp.under(Hypothesis.H0), wf_zp, convention),
             zp.gaussian_moments_zp(scene_zp.under(Hypothesis.H1), wf_zp, convention))
    kc = kld_gaussian(cp.gaussian_moments_cp(scene_cp.under(Hypothesis.H0), wf_cp, convention).moments,
             cp.gaussian_moments_cp(scene_cp.under(Hypothesis.H1), wf_cp, convention).moments)
    return kz, kc


def clutter_kld_crossing_db(scene_zp: ChannelScene, scene_cp: ChannelScene,
                            wf_zp: WaveformConfig, wf_cp: WaveformConfig,
                            lo_db: float = -30.0, hi_db: float = 30.0,
                            convention: str = "exact", tol: float = 1e-9) -> float:
    """Clutter power (dB over noise) at which the CP KLD falls to the ZP KLD.

    The ZP scene is held fixed (its shift should reject the clutter); the CP
    scene's total clutter power is swept.

    Raises:
        InfeasibleQueryError: when the crossing is not inside [lo_db, hi_db].
    """
    kz, _ = kld_compare(scene_zp, scene_cp, wf_zp, wf_cp, convention)

    def gap(db: float) -> float:
        sc = replace(scene_cp, clutter_power_ratio=10.0 ** (db / 10.0))
        return kld_compare(scene_zp, sc, wf_zp, wf_cp, convention)[1] - kz

    a, b = lo_db, hi_db
    if not gap(a) > 0 > gap(b):
        raise InfeasibleQueryError(f"CP/ZP KLD crossing outside [{lo_db}, {hi_db}] dB")
    while b - a > tol:
        m = 0.5 * (a + b)
        if gap(m) > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Model selection


@dataclass(frozen=True)
class ModelChoice:
    """Selected PD model and the diagnostics behind it.

    ``sigma_ratio`` is set for ZP scenes where the split applies and
    ``covariance_fraction`` for CP scenes; ``gamma_acceptable`` tells whether
    the Gamma approximation passes its diagnostic threshold.
    """

    model: str
    gamma_acceptable: bool
    sigma_ratio: float | None = None
    covariance_fraction: float | None = None
    reason: str = ""


def model_select(scene: ChannelScene, wf: WaveformConfig, sigma_ratio_min: float = 300.0,
                 covariance_max: float = 0.01) -> ModelChoice:
    """Pick the most faithful PD model for a scene.

    ZP: exact when the split model applies and its quadrature converges,
    otherwise gamma when sigma_R > ``sigma_ratio_min``, otherwise gaussian.
    CP: gamma when clutter-free with C~ < ``covariance_max``, otherwise gaussian.
    """
    h1 = scene.under(Hypothesis.H1)
    if wf.kind is WaveformKind.ZP:
        try:
            sr = zp.sigma_ratio(h1, wf)
        except zp.PreconditionError as exc:
            return ModelChoice("gaussian", False, reason=str(exc))
        ok = sr > sigma_ratio_min
        try:
            mean = zp.gaussian_moments_zp(h1, wf).mean
            zp.pd_exact(mean, h1, wf)
        except (ConvergenceError, OverflowError) as exc:
            model = "gamma" if ok else "gaussian"
            return ModelChoice(model, ok, sigma_ratio=sr, reason=f"exact unstable: {exc}")
        return ModelChoice("exact", ok, sigma_ratio=sr, reason="split model applies")
    frac = cp.gaussian_moments_cp(h1, wf).covariance_fraction
    if scene.clutter_power_ratio > 0:
        return ModelChoice("gaussian", False, covariance_fraction=frac, reason="clutter present")
    ok = frac < covariance_max
    return ModelChoice("gamma" if ok else "gaussian", ok, covariance_fraction=frac,
                       reason=f"C~={frac:.4g}")
