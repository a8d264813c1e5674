import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from isac_ed.scene import (
    SPEED_OF_LIGHT,
    ChannelScene,
    Hypothesis,
    SystemConfig,
    WaveformConfig,
    WaveformKind,
    build_scene,
    db_to_linear,
    dbm_to_watts,
    delay_bins,
    distance_from_bins,
    linear_to_db,
    noise_power,
    target_gain,
)

from conftest import sub6


def test_noise_power():
    cfg = sub6()
    assert noise_power(cfg) == pytest.approx(10 ** -12.4, rel=1e-12)
    cfg2 = SystemConfig(cfg.tx_power, cfg.antenna_gain, cfg.carrier_freq, 200e6, cfg.rcs)
    assert noise_power(cfg2) == pytest.approx(2 * noise_power(cfg), rel=1e-15)
    cfg3 = SystemConfig(0.1, 64, 24e9, 1e9, 10)
    assert noise_power(cfg3) == pytest.approx(3.981e-12, rel=1e-3)


def test_target_gain_table_one():
    cfg = sub6()
    lam = SPEED_OF_LIGHT / 2.4e9
    ref = 0.1 * 16 ** 2 * lam ** 2 * 10 / ((4 * math.pi) ** 3 * 192.0 ** 4)
    assert target_gain(cfg, 192.0) == pytest.approx(ref, rel=1e-14)
    assert target_gain(cfg, 192.0) == pytest.approx(1.48e-12, rel=0.01)


def test_target_gain_scaling_laws():
    cfg = sub6()
    assert target_gain(cfg, 50.0) / target_gain(cfg, 100.0) == pytest.approx(16.0, rel=1e-14)
    cfg2 = SystemConfig(cfg.tx_power, 2 * cfg.antenna_gain, cfg.carrier_freq, cfg.bandwidth, cfg.rcs)
    assert target_gain(cfg2, 70.0) / target_gain(cfg, 70.0) == pytest.approx(4.0, rel=1e-14)
    with pytest.raises(ValueError):
        target_gain(cfg, 0.0)
    with pytest.raises(ValueError):
        target_gain(cfg, -3.0)


@given(d1=st.floats(0.1, 1e4), d2=st.floats(0.1, 1e4))
def test_gain_decreasing_and_delay_nondecreasing(d1, d2):
    cfg = sub6()
    lo, hi = sorted((d1, d2))
    if lo < hi:
        assert target_gain(cfg, lo) > target_gain(cfg, hi)
    assert delay_bins(lo, 100e6) <= delay_bins(hi, 100e6)


def test_delay_bins_examples():
    # the examples use c = 3e8 for round numbers; exact c only moves sub-bin
    assert delay_bins(192.0, 100e6) == 128
    assert delay_bins(0.0, 100e6) == 0
    assert delay_bins(48.0, 100e6) == 32
    with pytest.raises(ValueError):
        delay_bins(-1.0, 100e6)


def test_delay_bins_ties_round_up():
    b = SPEED_OF_LIGHT / 2  # one bin per meter, so 2.5 m is an exact tie
    assert delay_bins(2.5, b) == 3
    assert delay_bins(0.5, b) == 1
    assert delay_bins(2.4999, b) == 2


def test_distance_from_bins():
    assert distance_from_bins(128, 100e6) == pytest.approx(192.0, rel=1e-3)
    assert distance_from_bins(0, 100e6) == 0.0
    for b in (100e6, 1e9, 4e9):
        for lt in range(0, 2049):
            assert delay_bins(distance_from_bins(lt, b), b) == lt


def test_db_helpers():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(-math.inf) == 0.0
    assert linear_to_db(0.0) == -math.inf
    assert dbm_to_watts(20) == pytest.approx(0.1)


def test_waveform_invariants():
    wf = WaveformConfig(WaveformKind.ZP, 512, 128)
    assert wf.total_size == 640 and wf.eta == pytest.approx(1.25) and wf.overhead == pytest.approx(0.2)
    assert wf.eta * wf.fft_size / wf.total_size == pytest.approx(1.0)
    WaveformConfig("zp", 512, 128, -512)
    WaveformConfig("zp", 512, 128, 127)
    for bad in (-513, 128):
        with pytest.raises(ValueError):
            WaveformConfig("zp", 512, 128, bad)
    with pytest.raises(ValueError):
        WaveformConfig("cp", 512, 128, 3)
    with pytest.raises(ValueError):
        WaveformConfig("zp", 0, 128)
    assert wf.with_kind("cp").kind is WaveformKind.CP


def test_build_scene_table_one(zp512):
    sc = build_scene(sub6(), zp512, distance=192.0, rsi=1.0)
    assert sc.target_delay == 128
    assert sc.target_gain_sq == pytest.approx(1.48e-12, rel=0.01)
    assert sc.hypothesis is Hypothesis.H1


def test_build_scene_from_delay(zp512):
    sc = build_scene(sub6(), zp512, target_delay=32)
    assert sc.target_delay == 32
    assert sc.target_gain_sq == pytest.approx(target_gain(sub6(), distance_from_bins(32, 100e6)))
    with pytest.raises(ValueError):
        build_scene(sub6(), zp512)
    with pytest.raises(ValueError):
        build_scene(sub6(), zp512, distance=10.0, target_delay=3)


def test_h0_ignores_target(zp512):
    sc = build_scene(sub6(), zp512, distance=100.0, hypothesis="H0")
    ch = sc.unified_channel()
    assert ch.gains[-1] == 0.0
    assert sc.under("H1").unified_channel().gains[-1] == sc.target_gain_sq


def test_clutter_split(zp512):
    sc = build_scene(sub6(), zp512, distance=100.0, clutter=1.0, clutter_delays=(10,))
    assert sc.clutter_gain_sq == pytest.approx(sc.noise_power)
    sc = build_scene(sub6(), zp512, distance=100.0, clutter=3.0, clutter_delays=(1, 5, 9))
    assert sc.clutter_gain_sq == pytest.approx(sc.noise_power)
    ch = sc.unified_channel()
    assert ch.delays == (0, 1, 5, 9, sc.target_delay)


@pytest.mark.parametrize("delays", [(5, 3), (4, 4), (-1,)])
def test_clutter_delays_validated(zp512, delays):
    with pytest.raises(ValueError):
        build_scene(sub6(), zp512, distance=100.0, clutter=1.0, clutter_delays=delays)


def test_scene_validation():
    with pytest.raises(ValueError):
        ChannelScene(noise_power=1.0, rsi_power_ratio=-1.0)
    with pytest.raises(ValueError):
        ChannelScene(noise_power=1.0, clutter_power_ratio=1.0)
    with pytest.raises(ValueError):
        ChannelScene(noise_power=0.0)
    with pytest.raises(ValueError):
        SystemConfig(0.1, 16, 2.4e9, 100e6, 10, pathloss_exp=0.5)


def test_zero_delay_scene_is_accepted(zp512):
    sc = build_scene(sub6(), zp512, target_delay=0)
    assert sc.target_delay == 0 and sc.target_gain_sq == 0.0
