"""Strict config parsing: units, unknown keys, dimension checks."""

import math

import pytest
from numpy.testing import assert_allclose

from thorq import ConfigError
from thorq.config import parse_config

GOOD = """
[run]
experiment = rabi
seed = 11

[laser]
power = 30 uW
wavelength = 148.3821 nm
beam_waist = 1.5 um
detuning = 2.04 MHz
phase_noise_rate = 10 Hz

[trap]
ion_mass = 229 u
charge_number = 3
axial_frequency = 1.2 MHz
ion_count = 2

[transition]
decay_rate = 1.25e-4 1/s
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parses_units(tmp_path):
    cfg = parse_config(write(tmp_path, GOOD))
    assert cfg.experiment == "rabi"
    assert cfg.seed == 11
    assert_allclose(cfg.laser.power, 30e-6)
    assert_allclose(cfg.laser.wavelength, 148.3821e-9)
    assert_allclose(cfg.laser.detuning, 2 * math.pi * 2.04e6)   # Hz -> rad/s
    assert_allclose(cfg.laser.phase_noise_rate, 10.0)           # rate: no 2 pi
    assert_allclose(cfg.trap.axial_frequency, 2 * math.pi * 1.2e6)
    assert_allclose(cfg.transition.decay_rate, 1.25e-4)
    assert cfg.noise.decay_rate == cfg.transition.decay_rate
    assert cfg.noise.laser_rate == 10.0


def test_missing_unit_rejected(tmp_path):
    bad = GOOD.replace("power = 30 uW", "power = 30")
    with pytest.raises(ConfigError, match="power"):
        parse_config(write(tmp_path, bad))


def test_wrong_dimension_rejected(tmp_path):
    bad = GOOD.replace("power = 30 uW", "power = 30 nm")
    with pytest.raises(ConfigError, match="power"):
        parse_config(write(tmp_path, bad))


def test_unknown_key_rejected(tmp_path):
    bad = GOOD + "\n[laser]\nwobble = 3 Hz\n"
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, bad))


def test_unknown_section_rejected(tmp_path):
    bad = GOOD + "\n[warp]\nfactor = 9\n"
    with pytest.raises(ConfigError, match="warp"):
        parse_config(write(tmp_path, bad))


def test_unknown_experiment_rejected(tmp_path):
    bad = GOOD.replace("experiment = rabi", "experiment = levitate")
    with pytest.raises(ConfigError, match="levitate"):
        parse_config(write(tmp_path, bad))


def test_missing_required_key(tmp_path):
    with pytest.raises(ConfigError, match="experiment"):
        parse_config(write(tmp_path, "[run]\nseed = 1\n"))


def test_missing_pulse_file_rejected(tmp_path):
    bad = GOOD.replace("experiment = rabi", "experiment = simulate-gate")
    bad += "\n[gate]\npulse_file = nowhere.txt\n"
    with pytest.raises(ConfigError, match="pulse_file"):
        parse_config(write(tmp_path, bad))


def test_defaults_fill_in(tmp_path):
    cfg = parse_config(write(tmp_path, "[run]\nexperiment = modes\n"))
    assert cfg.trap.ion_count == 2
    assert cfg.space.fock_cutoff == 6
    assert_allclose(cfg.gate["tau"], 0.1)
    assert cfg.scan["drift_points"] == 25
    assert cfg.scan["laser_rates"] == (0.1, 1.0, 10.0, 100.0)
