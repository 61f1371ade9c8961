import pytest

from stirapsim.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_envelopes_zero_delay(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[pulses]\ndelta_tau_us = 0\nfloor_850 = 0\nfloor_854 = 0\n"
                   "omega_850_peak_mhz = 100\nomega_854_peak_mhz = 100\n")
    assert run(tmp_path, "envelopes", "--config", str(cfg), "--plot") == 0
    text = (tmp_path / "envelopes.csv").read_text()
    assert text.startswith("# stirapsim")
    assert "# delta_tau_us = 0" in text
    rows = [ln.split(",") for ln in text.splitlines() if ln and not ln.startswith("#")][1:]
    assert all(r[1] == r[2] for r in rows)
    assert (tmp_path / "envelopes.svg").exists()


def test_detect_p0(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[detection]\np_shelved = 0\nn_trials = 4000\n")
    assert run(tmp_path, "detect", "--config", str(cfg), "--seed", "4") == 0
    text = (tmp_path / "detect.csv").read_text()
    mean = float(text.split("# estimator_mean = ")[1].split()[0])
    se = float(text.split("# estimator_standard_error = ")[1].split()[0])
    assert abs(mean) < 3 * se


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "detect", "--seed", "9", "--plot") == 0
    assert (a / "detect.csv").read_bytes() == (b / "detect.csv").read_bytes()
    assert (a / "detect.svg").read_bytes() == (b / "detect.svg").read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[pulses]\nomega_805 = 90\n")
    assert run(tmp_path, "simulate", "--config", str(cfg)) == 2
    assert "omega_805" in capsys.readouterr().err
    assert not (tmp_path / "simulate.csv").exists()


def test_runtime_error_leaves_no_file(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[solver]\ntol_rel = 1e-30\ntol_abs = 1e-40\n[pulses]\nshutter_delay_us = 20\n")
    assert run(tmp_path, "simulate", "--config", str(cfg)) == 1
    assert "simulate" in capsys.readouterr().err
    assert list(tmp_path.glob("simulate*")) == []


def test_simulate_and_scan(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[pulses]\nshutter_delay_us = 25\n[run]\nsamples = 21\n"
                   "[scan]\nparameter = delay\ngrid = 1, 3\n[detection]\nmeasure = true\n")
    assert run(tmp_path, "simulate", "--config", str(cfg), "--plot") == 0
    header = (tmp_path / "simulate.csv").read_text().splitlines()
    assert any(ln.startswith("# transfer_efficiency") for ln in header)
    assert run(tmp_path, "scan-delay", "--config", str(cfg), "--plot") == 0
    text = (tmp_path / "scan-delay.csv").read_text().splitlines()
    i = text.index("param,model_efficiency,measured_efficiency")
    assert [r.split(",")[0] for r in text[i + 1:]] == ["1", "3"]
    assert all(r.split(",")[2] for r in text[i + 1:])


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
