"""System configuration, radar link budget and interference geometry.

All types are immutable; constructors validate their invariants so that
every detector can trust the scene it receives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

SPEED_OF_LIGHT = 2.99792458e8  # m/s


class WaveformKind(str, Enum):
    ZP = "zp"
    CP = "cp"


class Hypothesis(str, Enum):
    H0 = "H0"  # target absent
    H1 = "H1"  # target present


def db_to_linear(db: float) -> float:
    """10^(db/10); -inf maps to 0."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    """10 log10(x); 0 maps to -inf."""
    return -math.inf if x == 0 else 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and positive, got {value}")


@dataclass(frozen=True)
class SystemConfig:
    """RF link-budget parameters.

    Attributes:
        tx_power: Transmit power P in watts.
        antenna_gain: Linear gain G, same for TX and RX.
        carrier_freq: Carrier frequency in Hz.
        bandwidth: Sampling bandwidth B in Hz.
        rcs: Radar cross-section in m^2.
        pathloss_exp: Path-loss exponent alpha (>= 1).
        noise_psd: Noise power spectral density in W/Hz.
    """

    tx_power: float
    antenna_gain: float
    carrier_freq: float
    bandwidth: float
    rcs: float
    pathloss_exp: float = 2.0
    noise_psd: float = field(default_factory=lambda: dbm_to_watts(-174.0))

    def __post_init__(self):
        for name in ("tx_power", "antenna_gain", "carrier_freq", "bandwidth", "rcs", "noise_psd"):
            _positive(name, getattr(self, name))
        if not (math.isfinite(self.pathloss_exp) and self.pathloss_exp >= 1):
            raise ValueError(f"pathloss_exp must be >= 1, got {self.pathloss_exp}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def link_constant(self) -> float:
        """P G^2 (c/f)^2 sigma_rcs / (4 pi)^3, the distance-free part of |h_t|^2."""
        return (self.tx_power * self.antenna_gain ** 2 * self.wavelength ** 2 * self.rcs
                / (4.0 * math.pi) ** 3)


@dataclass(frozen=True)
class WaveformConfig:
    """OFDM numerology.

    Attributes:
        kind: ZP or CP.
        fft_size: N_f.
        guard_size: N_zp or N_cp.
        sample_shift: ZP window shift Delta_s, in [-N_f, N_zp). Always 0 for CP.
    """

    kind: WaveformKind
    fft_size: int
    guard_size: int
    sample_shift: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", WaveformKind(self.kind))
        for name in ("fft_size", "guard_size", "sample_shift"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.fft_size < 1 or self.guard_size < 1:
            raise ValueError("fft_size and guard_size must be >= 1")
        if self.kind is WaveformKind.ZP:
            if not -self.fft_size <= self.sample_shift < self.guard_size:
                raise ValueError(
                    f"sample_shift {self.sample_shift} outside [-{self.fft_size}, {self.guard_size})")
        elif self.sample_shift != 0:
            raise ValueError("sample_shift applies to ZP only")

    @property
    def total_size(self) -> int:
        """N = N_f + guard."""
        return self.fft_size + self.guard_size

    @property
    def eta(self) -> float:
        """Power factor N / N_f (ZP data power that keeps the average at 1)."""
        return self.total_size / self.fft_size

    @property
    def overhead(self) -> float:
        """Guard overhead N_guard / N."""
        return self.guard_size / self.total_size

    def with_kind(self, kind: WaveformKind | str) -> "WaveformConfig":
        kind = WaveformKind(kind)
        shift = self.sample_shift if kind is WaveformKind.ZP else 0
        return WaveformConfig(kind, self.fft_size, self.guard_size, shift)


@dataclass(frozen=True)
class UnifiedChannel:
    """Every interfering or reflecting path, in a fixed order.

    Index 0 is the RSI (delay 0), then the clutters in ascending delay,
    then the target last. Gains are powers |h_j|^2 in watts.
    """

    gains: tuple[float, ...]
    delays: tuple[int, ...]

    def __post_init__(self):
        if len(self.gains) != len(self.delays):
            raise ValueError("gains and delays must have the same length")
        if not self.delays or self.delays[0] != 0:
            raise ValueError("entry 0 must be the RSI path at delay 0")
        if any(g < 0 for g in self.gains):
            raise ValueError("channel gains must be nonnegative")
        if any(d < 0 for d in self.delays):
            raise ValueError("delays must be nonnegative")

    def __len__(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class ChannelScene:
    """Interference and target geometry for one detection problem.

    Attributes:
        noise_power: sigma^2 in watts.
        rsi_power_ratio: rho_si = |h_i|^2 / sigma^2.
        clutter_power_ratio: total rho_ci, split evenly across clutters.
        clutter_delays: Clutter delays in samples, strictly ascending.
        target_delay: L_t in samples.
        target_gain_sq: |h_t|^2 in watts (ignored under H0).
        hypothesis: H0 or H1.
        target_distance: Distance in meters, informational.
    """

    noise_power: float
    rsi_power_ratio: float = 0.0
    clutter_power_ratio: float = 0.0
    clutter_delays: tuple[int, ...] = ()
    target_delay: int = 0
    target_gain_sq: float = 0.0
    hypothesis: Hypothesis = Hypothesis.H1
    target_distance: float = math.nan

    def __post_init__(self):
        _positive("noise_power", self.noise_power)
        if not self.rsi_power_ratio >= 0 or not math.isfinite(self.rsi_power_ratio):
            raise ValueError(f"rsi_power_ratio must be finite and >= 0, got {self.rsi_power_ratio}")
        if not self.clutter_power_ratio >= 0 or not math.isfinite(self.clutter_power_ratio):
            raise ValueError(f"clutter_power_ratio must be finite and >= 0, got {self.clutter_power_ratio}")
        delays = tuple(int(d) for d in self.clutter_delays)
        if any(d < 0 for d in delays):
            raise ValueError("clutter delays must be nonnegative")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError(f"clutter delays must be strictly ascending, got {delays}")
        if self.clutter_power_ratio > 0 and not delays:
            raise ValueError("clutter power given without clutter delays")
        object.__setattr__(self, "clutter_delays", delays)
        if int(self.target_delay) != self.target_delay or self.target_delay < 0:
            raise ValueError(f"target_delay must be a nonnegative integer, got {self.target_delay}")
        object.__setattr__(self, "target_delay", int(self.target_delay))
        if not self.target_gain_sq >= 0 or not math.isfinite(self.target_gain_sq):
            raise ValueError("target_gain_sq must be finite and >= 0")
        object.__setattr__(self, "hypothesis", Hypothesis(self.hypothesis))

    @property
    def rsi_gain_sq(self) -> float:
        return self.rsi_power_ratio * self.noise_power

    @property
    def clutter_gain_sq(self) -> float:
        """Power of each individual clutter path, rho_ci / N_c * sigma^2."""
        if not self.clutter_delays:
            return 0.0
        return self.clutter_power_ratio / len(self.clutter_delays) * self.noise_power

    @property
    def effective_target_gain_sq(self) -> float:
        return self.target_gain_sq if self.hypothesis is Hypothesis.H1 else 0.0

    @property
    def snr(self) -> float:
        """|h_t|^2 / sigma^2 (ignores the hypothesis)."""
        return self.target_gain_sq / self.noise_power

    def under(self, hypothesis: Hypothesis | str) -> "ChannelScene":
        return replace(self, hypothesis=Hypothesis(hypothesis))

    def with_target(self, gain_sq: float, delay: int | None = None) -> "ChannelScene":
        return replace(self, target_gain_sq=gain_sq,
                       target_delay=self.target_delay if delay is None else delay)

    def unified_channel(self) -> UnifiedChannel:
        """RSI, clutters and target as one ordered list of (gain, delay).

        The target entry is always present; its gain is zero under H0.
        """
        cg = self.clutter_gain_sq
        gains = (self.rsi_gain_sq, *([cg] * len(self.clutter_delays)), self.effective_target_gain_sq)
        delays = (0, *self.clutter_delays, self.target_delay)
        return UnifiedChannel(tuple(float(g) for g in gains), tuple(int(d) for d in delays))


def noise_power(cfg: SystemConfig) -> float:
    """sigma^2 = B * N_psd."""
    return cfg.bandwidth * cfg.noise_psd


def target_gain(cfg: SystemConfig, distance_m: float) -> float:
    """|h_t|^2 from the two-way radar equation with path-loss exponent alpha."""
    if not (math.isfinite(distance_m) and distance_m > 0):
        raise ValueError(f"distance must be positive, got {distance_m}")
    return cfg.link_constant / distance_m ** (2.0 * cfg.pathloss_exp)


def delay_bins(distance_m: float, bandwidth: float) -> int:
    """Round-trip delay in samples, round(2 d B / c), ties away from zero."""
    if not distance_m >= 0:
        raise ValueError(f"distance must be nonnegative, got {distance_m}")
    return int(math.floor(2.0 * distance_m * bandwidth / SPEED_OF_LIGHT + 0.5))


def distance_from_bins(delay: int, bandwidth: float) -> float:
    """Distance whose round-trip delay is exactly ``delay`` samples."""
    if delay < 0:
        raise ValueError(f"delay must be nonnegative, got {delay}")
    return delay * SPEED_OF_LIGHT / (2.0 * bandwidth)


def build_scene(cfg: SystemConfig, wf: WaveformConfig, distance: float | None = None,
                rsi: float = 0.0, clutter: float = 0.0, clutter_delays=(),
                hypothesis: Hypothesis | str = Hypothesis.H1,
                target_delay: int | None = None) -> ChannelScene:
    """Assemble a validated scene from the link budget.

    Exactly one of ``distance`` and ``target_delay`` must be given. With a
    delay the distance is taken as the one that maps exactly onto it.

    Args:
        cfg: Link-budget parameters.
        wf: Waveform; validated again here (Delta_s range).
        distance: Target distance in meters.
        rsi: rho_si (linear).
        clutter: Total rho_ci (linear).
        clutter_delays: Clutter delays in samples, strictly ascending.
        hypothesis: H0 or H1.
        target_delay: Target delay in samples, alternative to distance.
    """
    if (distance is None) == (target_delay is None):
        raise ValueError("give exactly one of distance and target_delay")
    WaveformConfig(wf.kind, wf.fft_size, wf.guard_size, wf.sample_shift)
    if distance is None:
        distance = distance_from_bins(target_delay, cfg.bandwidth)
        delay = int(target_delay)
    else:
        delay = delay_bins(distance, cfg.bandwidth)
    gain = target_gain(cfg, distance) if distance > 0 else 0.0
    return ChannelScene(noise_power=noise_power(cfg), rsi_power_ratio=rsi,
                        clutter_power_ratio=clutter, clutter_delays=tuple(clutter_delays),
                        target_delay=delay, target_gain_sq=gain,
                        hypothesis=Hypothesis(hypothesis), target_distance=float(distance))
