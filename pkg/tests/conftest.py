"""Shared scenes and configurations."""

import pytest

from isac_ed.scene import SystemConfig, WaveformConfig, WaveformKind, dbm_to_watts


def sub6() -> SystemConfig:
    return SystemConfig(dbm_to_watts(20), 16, 2.4e9, 100e6, 10)


def mmwave(gain: float = 64, bandwidth: float = 1e9) -> SystemConfig:
    return SystemConfig(dbm_to_watts(20), gain, 24e9, bandwidth, 10)


def subthz() -> SystemConfig:
    return SystemConfig(dbm_to_watts(20), 128, 140e9, 4e9, 1)


@pytest.fixture
def cfg_sub6():
    return sub6()


@pytest.fixture
def zp512():
    return WaveformConfig(WaveformKind.ZP, 512, 128)


@pytest.fixture
def cp512():
    return WaveformConfig(WaveformKind.CP, 512, 128)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
