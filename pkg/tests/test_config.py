import math

import pytest

from stirapsim.config import PRESETS, SCHEMA, ConfigError, parse_config, parse_config_text, resolve


def test_minimal_file_fills_defaults(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[scan]\nparameter = delay\n")
    cfg = parse_config(p)
    assert set(cfg.si) == set(SCHEMA)
    assert cfg["pulses"]["omega_850_peak_mhz"] == pytest.approx(2 * math.pi * 90e6)
    assert cfg["pulses"]["sigma_us"] == pytest.approx(1.5e-6)
    assert len(cfg.scan_grid()) == 30


def test_lab_units_converted():
    cfg = parse_config_text("[pulses]\nomega_850_peak_mhz = 90\n[detection]\nexposure_ms = 10 ms\n")
    assert cfg["pulses"]["omega_850_peak_mhz"] == 2 * math.pi * 90e6
    assert cfg["detection"]["exposure_ms"] == pytest.approx(10e-3)


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigError, match=r"line 3: unknown key 'omega_805'"):
        parse_config_text("[pulses]\nsigma_us = 1.5\nomega_805 = 90\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config_text("[pulse]\nsigma_us = 1\n")


@pytest.mark.parametrize("text, msg", [
    ("[pulses]\nsigma_us = 1.5 MHz\n", "unit 'MHz'"),
    ("[pulses]\nsigma_us = abc\n", "not a valid"),
    ("[pulses]\nsigma_us = -1\n", "sigma_us must be > 0"),
    ("sigma_us = 1\n", "outside any"),
    ("[pulses]\nsigma_us = 1\nsigma_us = 2\n", "duplicate"),
    ("[pulses]\njunk line\n", "malformed"),
    ("[output]\nformats = png\n", "vector"),
    ("[scan]\nparameter = phase\n", "parameter"),
])
def test_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.ini")


def test_presets():
    assert set(PRESETS) == {"fig3", "fig4", "width", "train"}
    f3 = resolve(preset="fig3")
    assert f3["raman"]["delta_one_mhz"] == pytest.approx(2 * math.pi * 600e6)
    assert f3["pulses"]["floor_854"] == 0.05
    f4 = resolve(preset="fig4")
    assert f4["pulses"]["delta_tau_us"] == pytest.approx(2e-6)
    assert f4["scan"]["parameter"] == "two_photon_detuning"
    assert resolve(preset="train").pulses().n_pairs == 7
    with pytest.raises(ConfigError):
        resolve(preset="nope")


def test_file_overrides_preset():
    cfg = parse_config_text("[pulses]\nsigma_us = 2\n", preset="fig3")
    assert cfg["pulses"]["sigma_us"] == pytest.approx(2e-6)
    assert cfg["pulses"]["floor_850"] == 0.02


def test_round_trip_through_header():
    cfg = resolve(preset="width")
    again = parse_config_text(cfg.to_ini())
    assert again.si == cfg.si


def test_builders():
    cfg = resolve(preset="fig3")
    assert cfg.model().pulses.delta_tau == pytest.approx(3e-6)
    assert cfg.detection().exposure == pytest.approx(8e-3)
    assert cfg.ion_string().n_ions == 9
    (a, b), (c, d) = cfg.bounds()
    assert (a, b, c, d) == pytest.approx((0.5e-6, 6e-6, 0.5e-6, 4e-6))
    assert cfg.scheme().total_rate(3) == pytest.approx(1 / 6.924e-9)
