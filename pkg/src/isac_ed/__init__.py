"""Energy detection for monostatic ZP- and CP-OFDM radar.

Analytic PD/PFA models, a counter-based Monte Carlo engine and range
trade-off analytics for joint sensing and communication waveforms.
"""

from .scene import (
    ChannelScene,
    Hypothesis,
    SystemConfig,
    WaveformConfig,
    WaveformKind,
    build_scene,
)

__all__ = [
    "ChannelScene",
    "Hypothesis",
    "SystemConfig",
    "WaveformConfig",
    "WaveformKind",
    "build_scene",
]

__version__ = "0.1.0"
