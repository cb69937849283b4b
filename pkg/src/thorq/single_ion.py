"""Single-ion open-system dynamics and coherence experiments.

The two-level density matrix is propagated with the optical Bloch
equations including isomer decay Gamma_ge and laser-phase-noise damping
of the coherence:

    d(rho_ee)/dt = 2 V Im(rho_ge) - Gamma_ge rho_ee
    d(rho_ge)/dt = -i V (2 rho_ee - 1) - (i Delta + gamma_c) rho_ge

with V = Omega/2.  Two coherence-damping conventions appear in practice
and both are provided:

* ``BLOCH`` - gamma_c = (Gamma_l + Gamma_ge)/2, the damped-Rabi form used
  by :func:`evolve_single_ion` and matched by :func:`analytic_damped_rabi`.
* ``LINDBLAD`` - gamma_c = Gamma_ge/2 + 2 Gamma_l, the rate generated by
  the dephasing dissipator (Gamma_l/2)(2 sz rho sz - 2 rho) together with
  decay.  Ramsey free evolution uses this one, so T2 -> 1/(2 Gamma_l)
  when Gamma_ge -> 0.

The coefficients are constant in every experiment here, so propagation is
an exact matrix exponential of the 4x4 affine Bloch generator rather than
time stepping.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import curve_fit

from .errors import FitError, NumericalError, PhysicsError

T2_INFINITE_RATE_FLOOR = 1e-6    # fitted decay below this reports T2 = inf


class DephasingConvention(enum.Enum):
    BLOCH = "bloch"          # gamma_c = (Gamma_l + Gamma_ge) / 2
    LINDBLAD = "lindblad"    # gamma_c = Gamma_ge / 2 + 2 Gamma_l


@dataclass(frozen=True)
class NoiseModel:
    """Decay rate Gamma_ge and laser phase-noise rate Gamma_l, both 1/s."""

    decay_rate: float = 0.0
    laser_rate: float = 0.0
    correlated_dephasing: bool = False   # two-ion gate only: collective sz channel

    def __post_init__(self):
        if self.decay_rate < 0 or self.laser_rate < 0:
            raise PhysicsError("noise rates must be >= 0")

    def coherence_rate(self, convention: DephasingConvention) -> float:
        if convention is DephasingConvention.BLOCH:
            return 0.5 * (self.laser_rate + self.decay_rate)
        return 0.5 * self.decay_rate + 2.0 * self.laser_rate


@dataclass
class ExperimentResult:
    """Time series of excited-state population plus fitted scalars."""

    times: np.ndarray
    populations: np.ndarray
    fitted: dict = field(default_factory=dict)

    def __post_init__(self):
        pop = np.asarray(self.populations, dtype=float)
        if pop.min() < -1e-8 or pop.max() > 1 + 1e-8:
            raise NumericalError(
                f"populations out of [0, 1] beyond tolerance: "
                f"min={pop.min():.3e}, max={pop.max():.3e}")


def _bloch_generator(omega, delta, decay_rate, coherence_rate):
    """Affine generator M for x = (rho_ee, Re rho_ge, Im rho_ge, 1)."""
    v = 0.5 * omega
    m = np.zeros((4, 4))
    m[0, 0] = -decay_rate
    m[0, 2] = 2.0 * v
    m[1, 1] = -coherence_rate
    m[1, 2] = delta
    m[2, 0] = -2.0 * v
    m[2, 1] = -delta
    m[2, 2] = -coherence_rate
    m[2, 3] = v
    return m


def _propagate_bloch(state, omega, delta, decay_rate, coherence_rate, times):
    """Exact evolution of (rho_ee, rho_ge) at the requested times."""
    x0 = np.array([state[0], state[1].real, state[1].imag, 1.0])
    m = _bloch_generator(omega, delta, decay_rate, coherence_rate)
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size, 4))
    if times.size == 0:
        return out
    # compose exact exponentials over the (typically uniform) grid
    order = np.argsort(times)
    last_t, x = 0.0, x0
    steps = {}
    for idx in order:
        dt = times[idx] - last_t
        if dt < 0:
            raise NumericalError("time grid must be non-negative")
        if dt > 0:
            key = round(dt, 15)
            if key not in steps:
                steps[key] = expm(m * dt)
            x = steps[key] @ x
            last_t = times[idx]
        out[idx] = x
    return out


def evolve_single_ion(init, omega, delta, noise: NoiseModel, t_grid,
                      convention: DephasingConvention = DephasingConvention.BLOCH
                      ) -> ExperimentResult:
    """Propagate a 2x2 density matrix under drive and noise.

    init: 2x2 density matrix in the (|g>, |e>) basis.  omega is the Rabi
    frequency (rad/s, = 2 V), delta the detuning (rad/s).  Returns the
    excited-state population on t_grid; the final (rho_ee, rho_ge) pair is
    stored in ``fitted['final_state']``.
    """
    rho = np.asarray(init, dtype=complex)
    if rho.shape != (2, 2):
        raise PhysicsError("single-ion initial state must be 2x2")
    if abs(np.trace(rho) - 1.0) > 1e-8 or np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise PhysicsError("initial state must be Hermitian with unit trace")
    gamma_c = noise.coherence_rate(convention)
    # basis order (|g>, |e>): rho_ee = rho[1,1], rho_ge = rho[0,1]
    traj = _propagate_bloch((rho[1, 1].real, rho[0, 1]), omega, delta,
                            noise.decay_rate, gamma_c, t_grid)
    populations = traj[:, 0]
    if populations.min() < -1e-8 or populations.max() > 1 + 1e-8:
        raise NumericalError("Bloch propagation produced unphysical populations")
    final = traj[-1] if len(traj) else None
    result = ExperimentResult(np.asarray(t_grid, dtype=float), populations)
    if final is not None:
        result.fitted["final_state"] = (final[0], final[1] + 1j * final[2])
    return result


def analytic_damped_rabi(omega, delta, noise: NoiseModel, t):
    """Closed-form damped-Rabi excited-state population (ground start).

    Valid for strong drive; warns when omega is not large compared with
    the decay rates.  gamma_tilde = (Gamma_l + Gamma_ge)/2.
    """
    g = noise.decay_rate
    gt = 0.5 * (noise.laser_rate + noise.decay_rate)
    if omega < 20 * max(g / 2.0, noise.laser_rate / 2.0):
        warnings.warn("analytic damped-Rabi form assumes Omega >> decay rates",
                      stacklevel=2)
    t = np.asarray(t, dtype=float)
    lam = np.sqrt(abs(omega**2 + delta**2 - 0.25 * (gt + g) ** 2))
    denom = 2.0 * (g * (delta**2 + gt**2) + gt * omega**2)
    # closed-system limit: the prefactor tends to 1/2 as the rates vanish
    steady = 0.5 if denom == 0.0 else gt * omega**2 / denom
    damping = 0.5 * (g + gt)
    return steady * (1.0 - np.exp(-damping * t)
                     * (np.cos(lam * t) + damping / lam * np.sin(lam * t)))


def _ground_state():
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def _excited_state():
    return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def rabi_experiment(omega, delta=0.0, noise: NoiseModel = NoiseModel(),
                    t_grid=None) -> ExperimentResult:
    """Drive from the ground state and locate the first population peak.

    The pi time is the position of the first maximum of rho_ee(t),
    refined by quadratic interpolation around the grid maximum.
    """
    if t_grid is None:
        if omega <= 0:
            raise PhysicsError("rabi_experiment needs omega > 0 or an explicit grid")
        t_max = 2.5 * np.pi / omega
        t_grid = np.linspace(0.0, t_max, 2001)
    result = evolve_single_ion(_ground_state(), omega, delta, noise, t_grid)
    pop = result.populations
    # first local maximum above a sane threshold
    peak = None
    for i in range(1, len(pop) - 1):
        if pop[i] >= pop[i - 1] and pop[i] > pop[i + 1] and pop[i] > 0.1:
            peak = i
            break
    if peak is None:
        raise FitError("no Rabi peak found within the time grid")
    t0, t1, t2 = result.times[peak - 1:peak + 2]
    y0, y1, y2 = pop[peak - 1:peak + 2]
    denom = (y0 - 2 * y1 + y2)
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    result.fitted["pi_time"] = t1 + shift * (t1 - t0)
    result.fitted["peak_population"] = float(y1)
    return result


def t1_experiment(noise: NoiseModel, t_grid=None) -> ExperimentResult:
    """Free decay of the excited state (ideal pi pulse, drive off) -> T1.

    Fits exp(-t/T1); raises FitError when the residual indicates the decay
    is not a single exponential.
    """
    if noise.decay_rate <= 0:
        raise PhysicsError("T1 experiment needs a finite decay rate")
    if t_grid is None:
        t_grid = np.linspace(0.0, 3.0 / noise.decay_rate, 400)
    result = evolve_single_ion(_excited_state(), 0.0, 0.0, noise, t_grid)
    pop = np.clip(result.populations, 1e-300, None)
    # linear fit of log population: exact for exponential decay
    coeffs, residuals, *_ = np.polyfit(result.times, np.log(pop), 1, full=True)
    rate = -coeffs[0]
    resid = float(residuals[0]) if len(residuals) else 0.0
    if resid > 1e-6 * len(pop):
        raise FitError(f"population decay is not exponential (residual {resid:.2e})")
    if rate <= 0:
        raise FitError("fitted decay rate is non-positive")
    result.fitted["t1"] = 1.0 / rate
    return result


def ramsey_experiment(delta, noise: NoiseModel, delays=None) -> ExperimentResult:
    """Ramsey interferometry: pi/2 -- free(T) at detuning delta -- pi/2.

    Pulses are ideal instantaneous rotations; only the free interval
    carries noise, applied with the Lindblad dephasing convention so the
    fringe envelope decays at 2 Gamma_l + Gamma_ge/2.  Returns the fringe
    population vs delay with fitted ``t2`` (1/e envelope time, or inf) and
    ``fringe_frequency``.
    """
    gamma_c = noise.coherence_rate(DephasingConvention.LINDBLAD)
    if delays is None:
        t2_guess = 1.0 / gamma_c if gamma_c > 0 else (20.0 / abs(delta) if delta else 1.0)
        horizon = 3.0 * t2_guess
        n = max(600, int(12 * abs(delta) * horizon / (2 * np.pi)) + 1)
        delays = np.linspace(0.0, horizon, min(n, 20000))
    delays = np.asarray(delays, dtype=float)

    half_pi = expm(-1j * (np.pi / 4.0) * np.array([[0, 1], [1, 0]], dtype=complex))
    rho0 = half_pi @ _ground_state() @ half_pi.conj().T
    ee0, ge0 = rho0[1, 1].real, rho0[0, 1]

    # exact free evolution of the 2x2 state (no drive)
    ee = ee0 * np.exp(-noise.decay_rate * delays)
    ge = ge0 * np.exp(-(1j * delta + gamma_c) * delays)
    gg = 1.0 - ee
    pops = np.empty_like(delays)
    for i in range(delays.size):
        rho = np.array([[gg[i], ge[i]], [np.conj(ge[i]), ee[i]]], dtype=complex)
        rho = half_pi @ rho @ half_pi.conj().T
        pops[i] = rho[1, 1].real
    result = ExperimentResult(delays, pops)

    if delta == 0.0 and gamma_c == 0.0 and noise.decay_rate == 0.0:
        result.fitted["t2"] = math.inf
        result.fitted["fringe_frequency"] = 0.0
        return result

    def model(t, amp, rate, freq, phase, offset):
        return amp * np.exp(-rate * t) * np.cos(freq * t + phase) + offset

    guess = [0.5, gamma_c if gamma_c > 0 else 1.0 / delays[-1], abs(delta), 0.0, 0.5]
    try:
        params, _ = curve_fit(model, delays, pops, p0=guess, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"Ramsey fringe fit failed: {exc}") from exc
    amp, rate, freq, phase, offset = params
    freq = abs(freq)
    if delta != 0.0 and abs(freq - abs(delta)) > 0.01 * abs(delta):
        raise FitError(
            f"fitted fringe frequency {freq:.6g} deviates from detuning "
            f"{abs(delta):.6g} by more than 1%")
    result.fitted["fringe_frequency"] = freq
    result.fitted["t2"] = math.inf if rate < T2_INFINITE_RATE_FLOOR else 1.0 / rate
    return result
