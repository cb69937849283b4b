"""Shared fixtures: trap/mode setup and cached optimized pulses."""

import numpy as np
import pytest

from thorq import (HilbertSpace, NuclearTransition, TrapConfig, lamb_dicke_matrix,
                   normal_modes, optimize_pulse, thorium_mass)
from thorq.cli import preset_power_configs


@pytest.fixture(scope="session")
def table_modes():
    trap = TrapConfig(ion_mass=thorium_mass(), charge_number=3,
                      axial_frequency=2 * np.pi * 1.2e6, ion_count=2)
    modes = normal_modes(trap)
    return modes.with_lamb_dicke(lamb_dicke_matrix(modes, NuclearTransition()))


@pytest.fixture(scope="session")
def gate_space():
    return HilbertSpace(qubit_count=2, phonon_mode_count=2, fock_cutoff=6)


@pytest.fixture(scope="session")
def optimized_pulse(table_modes):
    """The baseline-power pulse (tau = 100 ms, Rabi in [3, 20] kHz)."""
    return optimize_pulse(table_modes, preset_power_configs()["p30uW"])


@pytest.fixture(scope="session")
def optimized_pulse_10x(table_modes):
    """The 10x-power pulse (tau = 10 ms, Rabi in [3, 60] kHz)."""
    return optimize_pulse(table_modes, preset_power_configs()["p300uW"])
