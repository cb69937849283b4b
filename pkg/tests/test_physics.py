"""Drive/trap physics: intensities, Rabi scaling, spacing, modes, Lamb-Dicke."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from thorq import (LaserConfig, NuclearTransition, PhysicsError, TrapConfig,
                   ion_spacing, lamb_dicke_matrix, laser_intensity, normal_modes,
                   rabi_frequency, thorium_mass)

TABLE_TRAP = TrapConfig(ion_mass=thorium_mass(), charge_number=3,
                        axial_frequency=2 * np.pi * 1.2e6, ion_count=2)


class TestLaserIntensity:
    def test_zero_power(self):
        assert laser_intensity(LaserConfig(power=0.0, beam_waist=1.5e-6)) == 0.0

    def test_table_value(self):
        # 30 uW / (pi (1.5 um)^2), evaluated by hand
        val = laser_intensity(LaserConfig(power=30e-6, beam_waist=1.5e-6))
        assert_allclose(val, 4.2441318e6, rtol=1e-6)

    def test_linear_in_power(self):
        a = laser_intensity(LaserConfig(power=10e-6))
        b = laser_intensity(LaserConfig(power=20e-6))
        assert b == 2 * a

    def test_bad_waist_rejected(self):
        with pytest.raises(PhysicsError):
            LaserConfig(power=1e-6, beam_waist=0.0)


class TestRabiFrequency:
    def test_zero_decay_zero_coupling(self):
        laser = LaserConfig(power=30e-6)
        assert rabi_frequency(laser, NuclearTransition(decay_rate=0.0)) == 0.0

    def test_sqrt_power_scaling(self):
        nt = NuclearTransition()
        w1 = rabi_frequency(LaserConfig(power=10e-6), nt)
        w4 = rabi_frequency(LaserConfig(power=40e-6), nt)
        assert_allclose(w4, 2 * w1, rtol=1e-12)

    def test_power_ratio_property(self):
        nt = NuclearTransition()
        rng = np.random.default_rng(11)
        for _ in range(20):
            p1, p2 = rng.uniform(1e-6, 1e-3, 2)
            w1 = rabi_frequency(LaserConfig(power=p1), nt)
            w2 = rabi_frequency(LaserConfig(power=p2), nt)
            assert_allclose(w1**2 / w2**2, p1 / p2, rtol=1e-10)

    def test_low_khz_regime_at_table_power(self):
        # Across the predicted 1e3-1e4 s lifetime band, the 30 uW drive
        # lands in the sub-kHz-to-kHz range.
        laser = LaserConfig(power=30e-6, beam_waist=1.5e-6)
        for lifetime in (1e3, 8e3, 1e4):
            omega = rabi_frequency(laser, NuclearTransition(decay_rate=1 / lifetime))
            assert 2 * np.pi * 100 < omega < 2 * np.pi * 20e3

    def test_monotone_in_decay_rate(self):
        laser = LaserConfig(power=30e-6)
        w_small = rabi_frequency(laser, NuclearTransition(decay_rate=1e-4))
        w_big = rabi_frequency(laser, NuclearTransition(decay_rate=1e-3))
        assert w_big > w_small


class TestIonSpacing:
    def test_charge_scaling(self):
        base = TrapConfig(ion_mass=thorium_mass(), charge_number=1,
                          axial_frequency=2 * np.pi * 1.2e6)
        z3 = TrapConfig(ion_mass=thorium_mass(), charge_number=3,
                        axial_frequency=2 * np.pi * 1.2e6)
        assert_allclose(ion_spacing(z3), 3 ** (2 / 3) * ion_spacing(base), rtol=1e-12)

    def test_frequency_scaling(self):
        full = ion_spacing(TABLE_TRAP)
        half = ion_spacing(TrapConfig(ion_mass=thorium_mass(), charge_number=3,
                                      axial_frequency=np.pi * 1.2e6))
        assert_allclose(half, 2 ** (2 / 3) * full, rtol=1e-12)

    def test_table_value(self):
        # independent hand evaluation of the closed form
        assert_allclose(ion_spacing(TABLE_TRAP), 5.770002e-6, rtol=1e-6)

    def test_mass_frequency_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            c = rng.uniform(0.2, 5.0)
            a = ion_spacing(TrapConfig(ion_mass=thorium_mass(), charge_number=3,
                                       axial_frequency=2 * np.pi * 1e6))
            b = ion_spacing(TrapConfig(ion_mass=c * thorium_mass(), charge_number=3,
                                       axial_frequency=2 * np.pi * 1e6 / np.sqrt(c)))
            assert_allclose(a, b, rtol=1e-12)

    def test_wrong_ion_count(self):
        with pytest.raises(PhysicsError):
            ion_spacing(TrapConfig(ion_mass=thorium_mass(), ion_count=3))


class TestNormalModes:
    def test_table_frequencies(self):
        modes = normal_modes(TABLE_TRAP)
        assert_allclose(modes.frequencies / (2 * np.pi) / 1e6, [1.2, 2.0785],
                        rtol=1e-3)

    def test_stretch_ratio(self):
        modes = normal_modes(TABLE_TRAP)
        assert_allclose(modes.frequencies[1] / modes.frequencies[0], np.sqrt(3.0),
                        rtol=1e-12)

    def test_vector_symmetry(self):
        modes = normal_modes(TABLE_TRAP)
        com, stretch = modes.mode_vectors[:, 0], modes.mode_vectors[:, 1]
        assert_allclose(com[0], com[1], rtol=1e-12)
        assert_allclose(stretch[0], -stretch[1], rtol=1e-12)

    def test_chain_too_long(self):
        with pytest.raises(PhysicsError):
            normal_modes(TrapConfig(ion_mass=thorium_mass(), ion_count=3))


class TestLambDicke:
    def test_table_reproduction(self):
        modes = normal_modes(TABLE_TRAP)
        eta = lamb_dicke_matrix(modes, NuclearTransition())
        target = np.array([[0.1285, 0.0976], [0.1285, 0.0976]])
        assert_allclose(np.abs(eta), target, rtol=0.01)

    def test_orthogonal_projection(self):
        modes = normal_modes(TABLE_TRAP)
        eta = lamb_dicke_matrix(modes, NuclearTransition(), projection=0.0)
        assert np.all(eta == 0.0)

    def test_mode_amplitude_scaling(self):
        # |eta_j1| / |eta_j2| = sqrt(omega_2/omega_1) |v_j1| / |v_j2|
        modes = normal_modes(TABLE_TRAP)
        eta = lamb_dicke_matrix(modes, NuclearTransition())
        unit = modes.mode_vectors / np.sqrt(
            1.0545718e-34 / (2 * TABLE_TRAP.ion_mass * modes.frequencies))
        lhs = np.abs(eta[:, 0]) / np.abs(eta[:, 1])
        rhs = np.sqrt(modes.frequencies[1] / modes.frequencies[0]) \
            * np.abs(unit[:, 0]) / np.abs(unit[:, 1])
        assert_allclose(lhs, rhs, rtol=1e-10)
