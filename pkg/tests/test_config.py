import math

import pytest

from rydswitch import config
from rydswitch.config import ConfigError


def test_parse_quantity_units():
    assert config.parse_quantity("12 um", "length") == pytest.approx(12e-6)
    assert config.parse_quantity("5.75 MHz", "frequency") == pytest.approx(2 * math.pi * 5.75e6)
    assert config.parse_quantity("136, 37, 37 Hz", "frequency") == pytest.approx(
        tuple(2 * math.pi * f for f in (136, 37, 37)))
    assert config.parse_quantity("0.27", None) == 0.27


def test_wrong_unit_names_field():
    with pytest.raises(ConfigError) as exc:
        config.parse_quantity("12 mW", "length", "control_waist")
    assert "control_waist" in str(exc.value)
    with pytest.raises(ConfigError, match="unknown unit"):
        config.parse_quantity("12 furlongs", "length", "control_waist")
    with pytest.raises(ConfigError, match="dimensionless"):
        config.parse_quantity("0.5 um", None, "branching_target")


def test_empty_config_lists_all_missing(tmp_path):
    f = tmp_path / "empty.ini"
    f.write_text("")
    with pytest.raises(ConfigError) as exc:
        config.load_config(f)
    msg = str(exc.value)
    for name in ("atom_number", "temperature", "trap_freqs", "C6", "cycle_time", "detection_efficiency"):
        assert name in msg
    assert "rydberg_n" not in msg  # has a default


def test_waist_in_wrong_unit(tmp_path, preset):
    text = open(preset.source).read().replace("control_waist = 12 um", "control_waist = 12 mW")
    f = tmp_path / "bad.ini"
    f.write_text(text)
    with pytest.raises(ConfigError, match="control_waist"):
        config.load_config(f)


def test_domain_error_becomes_config_error(tmp_path, preset):
    text = open(preset.source).read().replace("temperature = 0.43 uK", "temperature = -1 uK")
    f = tmp_path / "neg.ini"
    f.write_text(text)
    with pytest.raises(ConfigError, match="temperature"):
        config.load_config(f)


def test_preset_contents(preset):
    assert preset.experiment.rydberg_n == 100
    assert preset.section("storage") == {"b": 2.0, "eta_sb": 0.29, "od": 3.2, "od_eit": 0.91}
    assert preset.section("montecarlo")["alternate"] is True
    assert preset.reference["blockade_radius_target"] == pytest.approx(14e-6)


def test_preset_search_path(tmp_path, monkeypatch, preset):
    (tmp_path / "mine.ini").write_text(open(preset.source).read())
    monkeypatch.setenv(config.PRESET_ENV, str(tmp_path))
    assert "mine" in config.available_presets()
    assert config.load_preset("mine").name == "mine"
    with pytest.raises(ConfigError, match="available"):
        config.load_preset("nope")


def test_missing_file():
    with pytest.raises(ConfigError):
        config.load_config("/nonexistent/file.ini")
