"""Drive and trap physics for a two-ion chain of trapped Th-229 ions.

Everything here derives laser/trap quantities from physical configuration:
beam intensity, carrier Rabi frequency, equilibrium ion spacing, axial
normal modes and the Lamb-Dicke coupling matrix.  All angular frequencies
are stored in rad/s; plain Hz appears only at I/O boundaries.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR, EPS0, E_CHARGE, ATOMIC_MASS, C_LIGHT
from .errors import PhysicsError

# Default isomer decay rate: 8000 s lifetime, inside the predicted
# 1e3 - 1e4 s band for the Th-229 isomeric state.
DEFAULT_DECAY_RATE = 1.25e-4           # 1/s
DEFAULT_WAVELENGTH = 148.3821e-9       # m


@dataclass(frozen=True)
class LaserConfig:
    """Drive-laser parameters.

    power: W; wavelength/beam_waist: m; detuning and drift_offset: rad/s;
    phase_noise_rate: 1/s.
    """

    power: float
    wavelength: float = DEFAULT_WAVELENGTH
    beam_waist: float = 1.5e-6
    detuning: float = 0.0
    phase_noise_rate: float = 0.0
    drift_offset: float = 0.0

    def __post_init__(self):
        if self.power < 0:
            raise PhysicsError("laser power must be >= 0")
        if self.beam_waist <= 0:
            raise PhysicsError("beam waist must be > 0")
        if self.wavelength <= 0:
            raise PhysicsError("laser wavelength must be > 0")
        if self.phase_noise_rate < 0:
            raise PhysicsError("phase noise rate must be >= 0")


@dataclass(frozen=True)
class TrapConfig:
    """Linear trap and ion-chain parameters (SI)."""

    ion_mass: float                    # kg
    charge_number: int = 3
    axial_frequency: float = 2 * np.pi * 1.2e6   # rad/s
    ion_count: int = 2

    def __post_init__(self):
        if self.ion_mass <= 0:
            raise PhysicsError("ion mass must be > 0")
        if self.charge_number < 1:
            raise PhysicsError("charge number must be >= 1")
        if self.axial_frequency <= 0:
            raise PhysicsError("axial frequency must be > 0")
        if self.ion_count < 1:
            raise PhysicsError("ion count must be >= 1")


@dataclass(frozen=True)
class NuclearTransition:
    """Nuclear qubit transition: decay rate (1/s) and wavelength (m).

    decay_rate == 0 is tolerated (it makes the radiative coupling vanish);
    operations that need a finite lifetime reject it themselves.
    """

    decay_rate: float = DEFAULT_DECAY_RATE
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        if self.decay_rate < 0:
            raise PhysicsError("decay rate must be >= 0")
        if self.wavelength <= 0:
            raise PhysicsError("transition wavelength must be > 0")

    @property
    def wavevector(self):
        """Magnitude of the transition wavevector k = 2*pi/lambda (1/m)."""
        return 2 * np.pi / self.wavelength


@dataclass(frozen=True)
class TrapModes:
    """Axial normal modes of the chain.

    frequencies: (P,) rad/s, ascending.  mode_vectors: (N, P) zero-point
    displacement per ion, in meters: sqrt(hbar / (2 m omega_p)) times the
    normalized eigenvector component.  lamb_dicke: (N, P) dimensionless,
    filled in by :func:`lamb_dicke_matrix`.
    """

    frequencies: np.ndarray
    mode_vectors: np.ndarray
    lamb_dicke: np.ndarray | None = field(default=None)

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        vecs = np.asarray(self.mode_vectors, dtype=float)
        if freqs.ndim != 1 or np.any(np.diff(freqs) < 0):
            raise PhysicsError("mode frequencies must be a sorted 1-D array")
        if vecs.shape[1] != freqs.size:
            raise PhysicsError("mode_vectors must have one column per mode")
        if self.lamb_dicke is not None and not np.all(np.isfinite(self.lamb_dicke)):
            raise PhysicsError("Lamb-Dicke matrix must be finite")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "mode_vectors", vecs)

    def with_lamb_dicke(self, eta):
        return TrapModes(self.frequencies, self.mode_vectors, np.asarray(eta, dtype=float))


def laser_intensity(laser: LaserConfig) -> float:
    """Peak intensity I = P / (pi w0^2) in W/m^2."""
    if laser.beam_waist <= 0:
        raise PhysicsError("beam waist must be > 0")
    return laser.power / (np.pi * laser.beam_waist**2)


def rabi_frequency(laser: LaserConfig, transition: NuclearTransition) -> float:
    """Carrier Rabi frequency Omega (rad/s) of the driven nuclear transition.

    The coupling matrix element scales with the field amplitude and the
    radiative width of the transition,

        V = sqrt(E0^2 pi eps0 hbar Gamma / k^3) / hbar,  Omega = 2 V,

    with E0^2 = 2 I / (c eps0) for a travelling wave of intensity I and
    k = 2 pi / lambda.  Omega grows as sqrt(P) and sqrt(Gamma).
    """
    intensity = laser_intensity(laser)
    k = transition.wavevector
    v_sq = 2 * np.pi * intensity * transition.decay_rate / (HBAR * C_LIGHT * k**3)
    return 2.0 * np.sqrt(v_sq)


def ion_spacing(trap: TrapConfig) -> float:
    """Equilibrium spacing of a two-ion chain (m).

    d = (2 e^2 / (4 pi eps0 m omega_z^2))^(1/3) * Z^(2/3)
    """
    if trap.ion_count != 2:
        raise PhysicsError("ion spacing formula applies to a two-ion chain only")
    base = 2 * E_CHARGE**2 / (4 * np.pi * EPS0 * trap.ion_mass * trap.axial_frequency**2)
    return base ** (1.0 / 3.0) * trap.charge_number ** (2.0 / 3.0)


def normal_modes(trap: TrapConfig) -> TrapModes:
    """Axial normal modes of a one- or two-ion chain.

    Two identical ions have the center-of-mass mode at omega_z with
    eigenvector (1, 1)/sqrt(2) and the stretch mode at sqrt(3) omega_z
    with eigenvector (1, -1)/sqrt(2).  Mode vectors are scaled to the
    zero-point amplitude sqrt(hbar / (2 m omega_p)) per ion.
    """
    if trap.ion_count > 2:
        raise PhysicsError("normal modes implemented for chains of at most 2 ions")
    wz = trap.axial_frequency
    if trap.ion_count == 1:
        freqs = np.array([wz])
        unit = np.array([[1.0]])
    else:
        freqs = np.array([wz, np.sqrt(3.0) * wz])
        unit = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    zero_point = np.sqrt(HBAR / (2.0 * trap.ion_mass * freqs))
    return TrapModes(frequencies=freqs, mode_vectors=unit * zero_point[np.newaxis, :])


def lamb_dicke_matrix(modes: TrapModes, transition: NuclearTransition,
                      projection: float = 1.0) -> np.ndarray:
    """Lamb-Dicke matrix eta_{j,p} = k * b_{j,p} * projection.

    projection is the cosine of the laser wavevector onto the mode axis
    (1.0: beam along the trap axis).
    """
    return transition.wavevector * modes.mode_vectors * projection


def thorium_mass(mass_number: int = 229) -> float:
    """Ion mass in kg for a given mass number (u-based, electron mass ignored)."""
    return mass_number * ATOMIC_MASS
