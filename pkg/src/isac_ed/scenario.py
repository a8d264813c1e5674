"""Flat ``key = value`` scenario files.

One dotted key per line, ``#`` starts a comment, lists are comma separated.
Unknown or repeated keys are rejected with the offending line number.

Example (sub-6 GHz scene)::

    system.tx_power_dbm = 20
    system.antenna_gain = 16
    system.carrier_freq_hz = 2.4e9
    system.bandwidth_hz = 100e6
    system.rcs_m2 = 10
    waveform.kind = zp
    waveform.fft_size = 512
    waveform.guard_size = 128
    channel.rsi_db = 0
    channel.target_delay_bins = 32
    detect.thresholds_over_sigma2 = 189.47189, 233.04371
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .scene import (
    ChannelScene,
    Hypothesis,
    SystemConfig,
    WaveformConfig,
    WaveformKind,
    build_scene,
    db_to_linear,
    dbm_to_watts,
)

MODEL_CHOICES = ("exact", "gamma", "gaussian", "auto")


class ScenarioError(ValueError):
    """Malformed scenario; carries the offending key and line when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {s}")
    return int(v)


def _int_list(s: str) -> tuple[int, ...]:
    return tuple(_int(p) for p in s.split(",") if p.strip())


def _float_list(s: str) -> tuple[float, ...]:
    return tuple(float(p) for p in s.split(",") if p.strip())


def _kind(s: str) -> str:
    return WaveformKind(s.strip().lower()).value


def _model(s: str) -> str:
    s = s.strip().lower()
    if s not in MODEL_CHOICES:
        raise ValueError(f"model must be one of {', '.join(MODEL_CHOICES)}")
    return s


# file key -> (attribute, parser)
_KEYS = {
    "system.tx_power_dbm": ("tx_power_dbm", _float),
    "system.antenna_gain": ("antenna_gain", _float),
    "system.carrier_freq_hz": ("carrier_freq_hz", _float),
    "system.bandwidth_hz": ("bandwidth_hz", _float),
    "system.rcs_m2": ("rcs_m2", _float),
    "system.pathloss_exp": ("pathloss_exp", _float),
    "system.noise_psd_dbm_hz": ("noise_psd_dbm_hz", _float),
    "waveform.kind": ("kind", _kind),
    "waveform.fft_size": ("fft_size", _int),
    "waveform.guard_size": ("guard_size", _int),
    "waveform.sample_shift": ("sample_shift", _int),
    "channel.rsi_db": ("rsi_db", _float),
    "channel.clutter_total_db": ("clutter_total_db", _float),
    "channel.clutter_delays": ("clutter_delays", _int_list),
    "channel.target_distance_m": ("target_distance_m", _float),
    "channel.target_delay_bins": ("target_delay_bins", _int),
    "detect.model": ("model", _model),
    "detect.pfa": ("pfa", _float),
    "detect.thresholds_over_sigma2": ("thresholds_over_sigma2", _float_list),
    "sim.trials": ("trials", _int),
    "sim.seed": ("seed", _int),
}
_REQUIRED = ("system.tx_power_dbm", "system.antenna_gain", "system.carrier_freq_hz",
             "system.bandwidth_hz", "system.rcs_m2", "waveform.kind", "waveform.fft_size",
             "waveform.guard_size")


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario. Field values are kept in file units (dB, dBm, Hz).

    ``rsi_db`` and ``clutter_total_db`` of -inf mean no RSI / no clutter.
    """

    tx_power_dbm: float
    antenna_gain: float
    carrier_freq_hz: float
    bandwidth_hz: float
    rcs_m2: float
    kind: str
    fft_size: int
    guard_size: int
    pathloss_exp: float = 2.0
    noise_psd_dbm_hz: float = -174.0
    sample_shift: int = 0
    rsi_db: float = -math.inf
    clutter_total_db: float = -math.inf
    clutter_delays: tuple[int, ...] = ()
    target_distance_m: float | None = None
    target_delay_bins: int | None = None
    model: str = "auto"
    pfa: float | None = None
    thresholds_over_sigma2: tuple[float, ...] | None = None
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if (self.target_distance_m is None) == (self.target_delay_bins is None):
            raise ScenarioError("give exactly one of channel.target_distance_m and "
                                "channel.target_delay_bins", key="channel.target_distance_m")
        if (self.pfa is None) == (self.thresholds_over_sigma2 is None):
            raise ScenarioError("give exactly one of detect.pfa and detect.thresholds_over_sigma2",
                                key="detect.pfa")
        if self.pfa is not None and not 0.0 < self.pfa < 1.0:
            raise ScenarioError(f"pfa must lie in (0, 1), got {self.pfa}", key="detect.pfa")
        if self.thresholds_over_sigma2 is not None:
            th = self.thresholds_over_sigma2
            if not th or any(b < a for a, b in zip(th, th[1:])) or th[0] <= 0:
                raise ScenarioError("thresholds must be positive and ascending",
                                    key="detect.thresholds_over_sigma2")
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1", key="sim.trials")
        if self.clutter_total_db > -math.inf and not self.clutter_delays:
            raise ScenarioError("clutter power given without clutter delays",
                                key="channel.clutter_delays")
        d = self.clutter_delays
        if any(b <= a for a, b in zip(d, d[1:])) or any(x < 0 for x in d):
            raise ScenarioError("clutter delays must be nonnegative and strictly ascending",
                                key="channel.clutter_delays")
        try:
            self.scene()
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc

    @property
    def system(self) -> SystemConfig:
        return SystemConfig(dbm_to_watts(self.tx_power_dbm), self.antenna_gain,
                            self.carrier_freq_hz, self.bandwidth_hz, self.rcs_m2,
                            self.pathloss_exp, dbm_to_watts(self.noise_psd_dbm_hz))

    @property
    def waveform(self) -> WaveformConfig:
        return WaveformConfig(WaveformKind(self.kind), self.fft_size, self.guard_size,
                              self.sample_shift)

    @property
    def rsi(self) -> float:
        return db_to_linear(self.rsi_db)

    @property
    def clutter(self) -> float:
        return db_to_linear(self.clutter_total_db)

    def scene(self, hypothesis: Hypothesis | str = Hypothesis.H1,
              waveform: WaveformConfig | None = None) -> ChannelScene:
        wf = self.waveform if waveform is None else waveform
        return build_scene(self.system, wf, distance=self.target_distance_m,
                           target_delay=self.target_delay_bins, rsi=self.rsi,
                           clutter=self.clutter, clutter_delays=self.clutter_delays,
                           hypothesis=hypothesis)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text.

    Raises:
        ScenarioError: unknown, repeated or malformed keys, missing required
            keys, or inconsistent combinations.
    """
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ScenarioError("expected 'key = value'", line=number)
        key, value = (p.strip() for p in body.split("=", 1))
        if key not in _KEYS:
            raise ScenarioError("unknown key", key=key, line=number)
        if key in lines:
            raise ScenarioError(f"repeated key (first on line {lines[key]})", key=key, line=number)
        attr, parser = _KEYS[key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise ScenarioError(f"bad value {value!r}: {exc}", key=key, line=number) from None
        lines[key] = number
    missing = [k for k in _REQUIRED if k not in lines]
    if missing:
        raise ScenarioError(f"missing required keys: {', '.join(missing)}")
    try:
        return Scenario(**values)
    except ScenarioError as exc:
        if exc.key in lines and exc.line is None:
            raise ScenarioError(str(exc).split(": ", 1)[-1], key=exc.key,
                                line=lines[exc.key]) from None
        raise


def load_scenario(path: str | Path) -> Scenario:
    """Read and parse a scenario file (I/O errors surface as ScenarioError)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text)


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(sc: Scenario) -> str:
    """Render a scenario back to text; unset optional fields are omitted."""
    out = []
    for key, (attr, _) in _KEYS.items():
        value = getattr(sc, attr)
        if value is None or value == ():
            continue
        out.append(f"{key} = {_format(value)}")
    return "\n".join(out) + "\n"
