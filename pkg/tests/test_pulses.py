"""Pulse containers and bit-exact serialization."""

import numpy as np
import pytest

from thorq import PhysicsError, PulseSequence, load_pulse, save_pulse, uniform_pulse


def test_segment_grid_mismatch_rejected():
    with pytest.raises(PhysicsError):
        PulseSequence(np.array([0.1, 0.2]), np.ones((2, 2)), np.ones((2, 2)),
                      total_duration=0.5)


def test_negative_duration_rejected():
    with pytest.raises(PhysicsError):
        PulseSequence(np.array([0.1, -0.1]), np.ones((2, 2)), np.ones((2, 2)),
                      total_duration=0.0)


def test_edges():
    pulse = uniform_pulse(2, 4, 1.0, np.ones((2, 4)), np.zeros((2, 4)))
    np.testing.assert_allclose(pulse.edges, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_amplitude_bounds_check():
    pulse = uniform_pulse(2, 4, 1.0, np.full((2, 4), 5.0), np.zeros((2, 4)))
    pulse.check_amplitude_bounds(1.0, 10.0)
    with pytest.raises(PhysicsError):
        pulse.check_amplitude_bounds(6.0, 10.0)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    pulse = uniform_pulse(2, 40, 0.1,
                          rng.uniform(1e3, 1e5, (2, 40)),
                          rng.uniform(0, 2 * np.pi, (2, 40)))
    path = tmp_path / "pulse.txt"
    save_pulse(pulse, path, header={
        "detuning_rad_s": 2 * np.pi * 2.04e6,
        "seed": 42,
        "mode_frequencies_rad_s": np.array([7.5e6, 1.3e7]),
        "lamb_dicke": np.array([[0.13, 0.10], [0.13, -0.10]]),
    })
    loaded = load_pulse(path)
    assert np.array_equal(loaded.durations, pulse.durations)
    assert np.array_equal(loaded.amplitudes, pulse.amplitudes)
    assert np.array_equal(loaded.phases, pulse.phases)
    assert loaded.total_duration == pulse.total_duration
    assert loaded.metadata["seed"] == 42
    assert loaded.metadata["detuning_rad_s"] == 2 * np.pi * 2.04e6
    assert np.array_equal(loaded.metadata["mode_frequencies_rad_s"],
                          np.array([7.5e6, 1.3e7]))
    assert np.array_equal(loaded.metadata["lamb_dicke"],
                          np.array([[0.13, 0.10], [0.13, -0.10]]))

    # a second write of the loaded pulse is byte-identical
    path2 = tmp_path / "pulse2.txt"
    save_pulse(loaded, path2, header={
        "detuning_rad_s": loaded.metadata["detuning_rad_s"],
        "seed": loaded.metadata["seed"],
        "mode_frequencies_rad_s": loaded.metadata["mode_frequencies_rad_s"],
        "lamb_dicke": loaded.metadata["lamb_dicke"],
    })
    assert path.read_bytes() == path2.read_bytes()
