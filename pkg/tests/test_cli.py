import subprocess
import sys
from pathlib import Path

import pytest

from isac_ed.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_print_scene(capsys):
    assert main(["print-scene", "--scenario", str(SCENARIOS / "sub6_zp.scn")]) == 0
    out = capsys.readouterr().out
    assert "L_t=32" in out and "sigma_R" in out


def test_print_scene_distance(tmp_path, capsys):
    text = (SCENARIOS / "sub6_zp.scn").read_text()
    text = text.replace("channel.target_delay_bins = 32", "channel.target_distance_m = 192")
    p = tmp_path / "d.scn"
    p.write_text(text)
    assert main(["print-scene", "--scenario", str(p)]) == 0
    assert "L_t=128" in capsys.readouterr().out


def test_experiment_writes_csv(tmp_path):
    out = tmp_path / "zp.csv"
    rc = main(["validate-zp", "--scenario", str(SCENARIOS / "sub6_zp.scn"), "--out", str(out),
               "--trials", "200", "--seed", "1"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("threshold_over_sigma2,") and len(lines) == 6
    first = out.read_bytes()
    assert main(["validate-zp", "--scenario", str(SCENARIOS / "sub6_zp.scn"), "--out", str(out),
                 "--trials", "200", "--seed", "1"]) == 0
    assert out.read_bytes() == first


def test_model_override(tmp_path):
    out = tmp_path / "zp.csv"
    assert main(["validate-zp", "--scenario", str(SCENARIOS / "upper_bound_mmwave.scn"), "--out",
                 str(out), "--trials", "10", "--model", "gaussian"]) == 0


def test_conformance(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["conformance", "--out", str(out)]) == 0
    assert "zp_mean_count: 0 mismatches" in capsys.readouterr().out


def test_exit_codes(tmp_path):
    scn = str(SCENARIOS / "sub6_zp.scn")
    assert main(["bogus", "--scenario", scn, "--out", str(tmp_path / "x")]) == 2
    bad = tmp_path / "bad.scn"
    bad.write_text("system.nope = 1\n")
    assert main(["validate-zp", "--scenario", str(bad), "--out", str(tmp_path / "x")]) == 3
    assert main(["validate-zp", "--scenario", scn, "--out", str(tmp_path / "no" / "x.csv"),
                 "--trials", "5"]) == 4
    assert main(["conformance", "--out", str(tmp_path / "no" / "x.csv")]) == 4
    assert main(["validate-cp", "--scenario", scn, "--out", str(tmp_path / "x")]) == 5
    with pytest.raises(SystemExit) as e:
        main(["validate-zp", "--scenario", scn])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["validate-zp", "--scenario", scn, "--out", "x", "--model", "magic"])
    assert e.value.code == 2


def test_malformed_scenario_reports_key_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("# c\nsystem.tx_power_dbm = abc\n")
    assert main(["print-scene", "--scenario", str(bad)]) == 3
    err = capsys.readouterr().err
    assert "line 2" in err and "system.tx_power_dbm" in err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "isac_ed.cli", "print-scene", "--scenario",
                        str(SCENARIOS / "sub6_cp.scn")], capture_output=True, text=True)
    assert r.returncode == 0 and "C~" in r.stdout
