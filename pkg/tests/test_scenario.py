import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_ed.scenario import ScenarioError, load_scenario, parse_scenario, serialize_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """\
system.tx_power_dbm = 20
system.antenna_gain = 16
system.carrier_freq_hz = 2.4e9
system.bandwidth_hz = 100e6
system.rcs_m2 = 10
waveform.kind = zp
waveform.fft_size = 512
waveform.guard_size = 128
channel.target_delay_bins = 32
detect.pfa = 0.01
"""


def test_parse_base():
    sc = parse_scenario(BASE)
    assert sc.kind == "zp" and sc.fft_size == 512 and sc.target_delay_bins == 32
    assert sc.rsi == 0.0 and sc.clutter == 0.0
    assert sc.scene().target_delay == 32
    assert sc.system.tx_power == pytest.approx(0.1)


def test_comments_and_blank_lines():
    sc = parse_scenario("# header\n\n" + BASE.replace("= 16", "= 16   # gain"))
    assert sc.antenna_gain == 16


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.scn")), ids=lambda p: p.name)
def test_templates_load(path):
    load_scenario(path)


@pytest.mark.parametrize("extra,key,line", [
    ("bogus.key = 1\n", "bogus.key", 11),
    ("system.rcs_m2 = 3\n", "system.rcs_m2", 11),
    ("waveform.sample_shift = x\n", "waveform.sample_shift", 11),
    ("waveform.fft_size = 1.5\n", None, None),
])
def test_errors_name_key_and_line(extra, key, line):
    with pytest.raises(ScenarioError) as e:
        parse_scenario(BASE + extra)
    if key is not None:
        assert e.value.key == key and e.value.line == line
        assert key in str(e.value) and f"line {line}" in str(e.value)


def test_exactly_one_target_and_detection():
    with pytest.raises(ScenarioError, match="target"):
        parse_scenario(BASE + "channel.target_distance_m = 10\n")
    with pytest.raises(ScenarioError, match="pfa"):
        parse_scenario(BASE + "detect.thresholds_over_sigma2 = 1, 2\n")
    with pytest.raises(ScenarioError):
        parse_scenario(BASE.replace("channel.target_delay_bins = 32\n", ""))


def test_missing_required():
    with pytest.raises(ScenarioError, match="system.rcs_m2"):
        parse_scenario(BASE.replace("system.rcs_m2 = 10\n", ""))


@pytest.mark.parametrize("extra", [
    "channel.clutter_delays = 9, 3\nchannel.clutter_total_db = 0\n",
    "channel.clutter_total_db = 0\n",
    "waveform.sample_shift = 128\n",
    "sim.trials = 0\n",
])
def test_invalid_combinations(extra):
    with pytest.raises(ScenarioError):
        parse_scenario(BASE + extra)


def test_clutter_delay_error_points_at_line():
    with pytest.raises(ScenarioError) as e:
        parse_scenario(BASE + "channel.clutter_total_db = 0\nchannel.clutter_delays = 9, 3\n")
    assert e.value.key == "channel.clutter_delays" and e.value.line == 12


def test_thresholds_must_ascend():
    text = BASE.replace("detect.pfa = 0.01", "detect.thresholds_over_sigma2 = 3, 2")
    with pytest.raises(ScenarioError):
        parse_scenario(text)


def test_unreadable_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.scn")


def test_round_trip_templates():
    for path in SCENARIOS.glob("*.scn"):
        sc = load_scenario(path)
        assert parse_scenario(serialize_scenario(sc)) == sc


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(["zp", "cp"]),
    nf=st.integers(16, 2048), guard=st.integers(1, 512),
    rsi=st.one_of(st.just(-math.inf), st.floats(-40, 40)),
    n_clutter=st.integers(0, 3),
    clutter_db=st.floats(-20, 20),
    use_delay=st.booleans(), value=st.floats(0.5, 300),
    trials=st.integers(1, 10 ** 6), seed=st.integers(0, 2 ** 63),
    model=st.sampled_from(["exact", "gamma", "gaussian", "auto"]),
)
def test_round_trip_property(kind, nf, guard, rsi, n_clutter, clutter_db, use_delay, value,
                             trials, seed, model):
    lines = BASE.replace("waveform.kind = zp", f"waveform.kind = {kind}")
    lines = lines.replace("fft_size = 512", f"fft_size = {nf}").replace("guard_size = 128",
                                                                      f"guard_size = {guard}")
    target = (f"channel.target_delay_bins = {int(value)}" if use_delay
              else f"channel.target_distance_m = {value!r}")
    lines = lines.replace("channel.target_delay_bins = 32", target)
    lines += f"channel.rsi_db = {rsi!r}\nsim.trials = {trials}\nsim.seed = {seed}\n"
    lines += f"detect.model = {model}\n"
    if n_clutter:
        lines += f"channel.clutter_total_db = {clutter_db!r}\n"
        lines += "channel.clutter_delays = " + ", ".join(str(3 * i + 1) for i in range(n_clutter)) + "\n"
    sc = parse_scenario(lines)
    again = parse_scenario(serialize_scenario(sc))
    assert again == sc
    assert serialize_scenario(again) == serialize_scenario(sc)
