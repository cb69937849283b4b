"""Closed-form second-order Magnus data for piecewise-constant pulses.

For a pulse with per-ion amplitude V_j(t) and phase phi_j(t) driving
sidebands detuned by delta_p = Delta - omega_p, the relevant integrals are

    beta_jp  = eta_jp Int_0^tau V_j(t) sin(phi_j(t) + delta_p t) dt
    theta_ab = Sum_p eta_ap eta_bp II_{t2<t1} V_a(t1) V_b(t2)
                 sin(phi_a(t1) + delta_p t1) sin(phi_b(t2) + delta_p t2)

together with the complex displacement integrals

    alpha_jp = Int_0^tau V_j(t) exp(i (phi_j(t) + delta_p t)) dt

(beta is eta times the imaginary part of alpha) and the spin-spin phase
of the sideband interaction picture,

    chi = Sum_p eta_0p eta_1p II_{t2<t1} [ V_0(t1)V_1(t2)
            sin(psi_0p(t1) - psi_1p(t2)) + (0 <-> 1) ],

with psi_jp(t) = phi_j(t) + delta_p t.  theta obeys the exact identity
theta_ab + theta_ba = Sum_p beta_ap beta_bp, so only a single ordered
pair carries independent information; the cost function uses theta[0, 1]
(ion 0 at the later time).

Everything is evaluated segment-by-segment with exact antiderivatives;
vanishing or near-degenerate detunings are handled by series limits, not
by division.
"""

from dataclasses import dataclass

import numpy as np

from .physics import TrapModes
from .pulses import PulseSequence

_SERIES_RADIUS = 0.25


def _moment(k, z):
    """Int_0^1 u^k e^{z u} du for complex z, stable for small |z|."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < _SERIES_RADIUS
    zs = z[small]
    # series: sum_n z^n / (n! (n+k+1))
    acc = np.zeros_like(zs)
    term = np.ones_like(zs)
    for n in range(0, 22):
        acc = acc + term / (n + k + 1)
        term = term * zs / (n + 1)
    out[small] = acc
    zb = z[~small]
    if zb.size:
        ez = np.exp(zb)
        if k == 0:
            val = (ez - 1.0) / zb
        elif k == 1:
            val = (ez * (zb - 1.0) + 1.0) / zb**2
        elif k == 2:
            val = (ez * (zb**2 - 2.0 * zb + 2.0) - 2.0) / zb**3
        elif k == 3:
            val = (ez * (zb**3 - 3.0 * zb**2 + 6.0 * zb - 6.0) + 6.0) / zb**4
        else:  # pragma: no cover - not used beyond k = 3
            raise ValueError("moment order not implemented")
        out[~small] = val
    return out


def _triangle(za, zb):
    """II_{0<=u2<=u1<=1} e^{za u1 + zb u2} du2 du1 for complex arrays.

    In this module za and zb always have equal magnitude (same detuning
    and segment length), so the degenerate branch can expand in both.
    """
    za, zb = np.broadcast_arrays(np.asarray(za, dtype=complex),
                                 np.asarray(zb, dtype=complex))
    out = np.empty(za.shape, dtype=complex)
    small = np.abs(zb) < _SERIES_RADIUS
    if np.any(~small):
        a, b = za[~small], zb[~small]
        out[~small] = (_moment(0, a + b) - _moment(0, a)) / b
    if np.any(small):
        a, b = za[small], zb[small]
        # double series: sum_{m,n} za^m zb^n / (m! n! (n+1) (m+n+2))
        val = np.zeros_like(a)
        am = np.ones_like(a)
        mfact = 1.0
        for m in range(0, 16):
            bn = np.ones_like(b)
            nfact = 1.0
            for n in range(0, 16 - m):
                val = val + am * bn / (mfact * nfact * (n + 1) * (m + n + 2))
                bn = bn * b
                nfact *= (n + 1)
            am = am * a
            mfact *= (m + 1)
        out[small] = val
    return out


def _segment_single(pulse: PulseSequence, deltas):
    """S[j, p, k] = Int_seg_k V_j e^{i (phi_jk + delta_p t)} dt."""
    edges = pulse.edges
    d = pulse.durations                      # (K,)
    deltas = np.asarray(deltas, dtype=float)
    z = 1j * deltas[:, None] * d[None, :]    # (P, K)
    base = d[None, :] * _moment(0, z) * np.exp(1j * deltas[:, None] * edges[:-1][None, :])
    phase = pulse.amplitudes * np.exp(1j * pulse.phases)   # (J, K)
    return phase[:, None, :] * base[None, :, :]            # (J, P, K)


def _segment_first_moment(pulse: PulseSequence, deltas):
    """T[j, p, k] = Int_seg_k t V_j e^{i (phi_jk + delta_p t)} dt."""
    edges = pulse.edges
    d = pulse.durations
    deltas = np.asarray(deltas, dtype=float)
    z = 1j * deltas[:, None] * d[None, :]
    m0 = _moment(0, z)
    m1 = _moment(1, z)
    base = (edges[:-1][None, :] * d[None, :] * m0 + d[None, :]**2 * m1) \
        * np.exp(1j * deltas[:, None] * edges[:-1][None, :])
    phase = pulse.amplitudes * np.exp(1j * pulse.phases)
    return phase[:, None, :] * base[None, :, :]


def displacement_integrals(pulse: PulseSequence, deltas):
    """alpha[j, p] = Int_0^tau V_j e^{i (phi_j + delta_p t)} dt (no eta factor)."""
    return _segment_single(pulse, deltas).sum(axis=2)


def displacement_moments(pulse: PulseSequence, deltas):
    """First time moment Int_0^tau t V_j e^{i psi_jp} dt (no eta factor)."""
    return _segment_first_moment(pulse, deltas).sum(axis=2)


def magnus_beta(pulse: PulseSequence, eta, deltas):
    """Spin-phonon displacement integrals beta[j, p] (see module docstring)."""
    alpha = displacement_integrals(pulse, deltas)
    return np.asarray(eta, dtype=float) * alpha.imag


def _ordered_double(pulse, deltas, a, b, s1, s2):
    """II_{t2<t1} V_a(t1) V_b(t2) e^{i(s1 psi_a(t1) + s2 psi_b(t2))} per mode.

    Returns a (P,) complex array.
    """
    S = _segment_single(pulse, deltas)       # (J, P, K)
    Xa = S[a] if s1 > 0 else np.conj(S[a])   # (P, K)
    Yb = S[b] if s2 > 0 else np.conj(S[b])
    prefix = np.concatenate([np.zeros((Yb.shape[0], 1), dtype=complex),
                             np.cumsum(Yb, axis=1)[:, :-1]], axis=1)
    cross = np.sum(Xa * prefix, axis=1)
    # same-segment triangle
    edges = pulse.edges[:-1]
    d = pulse.durations
    deltas = np.asarray(deltas, dtype=float)
    za = 1j * s1 * deltas[:, None] * d[None, :]
    zb = 1j * s2 * deltas[:, None] * d[None, :]
    tri = _triangle(za, zb)
    pref = (pulse.amplitudes[a][None, :] * pulse.amplitudes[b][None, :]
            * np.exp(1j * (s1 * pulse.phases[a] + s2 * pulse.phases[b]))[None, :]
            * np.exp(1j * (s1 + s2) * deltas[:, None] * edges[None, :])
            * d[None, :]**2)
    same = np.sum(pref * tri, axis=1)
    return cross + same


def magnus_theta(pulse: PulseSequence, eta, deltas):
    """Ordered-pair double integrals theta[a, b] (ion a at the later time)."""
    eta = np.asarray(eta, dtype=float)
    n = pulse.n_ions
    theta = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            acc = np.zeros(len(np.atleast_1d(deltas)), dtype=complex)
            for s1 in (+1, -1):
                for s2 in (+1, -1):
                    acc += (-0.25 * s1 * s2) * _ordered_double(pulse, deltas, a, b, s1, s2)
            theta[a, b] = float(np.sum(eta[a] * eta[b] * acc.real))
    return theta


def entangling_phase(pulse: PulseSequence, eta, deltas):
    """Second-order spin-spin phase chi of the sideband interaction picture.

    The full propagator factorizes as exp(Omega1) exp(-i chi sx sx) up to
    a global phase; chi = -pi/4 realizes exp(i pi/4 sx sx).
    """
    eta = np.asarray(eta, dtype=float)
    chi = 0.0
    for a, b in ((0, 1), (1, 0)):
        w = _ordered_double(pulse, deltas, a, b, +1, -1)
        chi += float(np.sum(eta[a] * eta[b] * w.imag))
    return chi


@dataclass(frozen=True)
class MagnusSummary:
    """beta (J, P), ordered theta (J, J), and the scalar cost."""

    beta: np.ndarray
    theta: np.ndarray
    cost: float


def pulse_cost(pulse: PulseSequence, eta, mode_frequencies, detuning,
               theta_target=np.pi / 4) -> float:
    """Cost C = Sum_jp beta_jp^2 + |theta[0, 1] - theta_target|.

    C vanishes iff every spin-phonon displacement integral is closed and
    the ordered-pair geometric phase hits its target.  The all-zero pulse
    gives C = theta_target.
    """
    deltas = detuning - np.asarray(mode_frequencies, dtype=float)
    beta = magnus_beta(pulse, eta, deltas)
    theta = magnus_theta(pulse, eta, deltas)
    return float(np.sum(beta**2) + abs(theta[0, 1] - theta_target))


def magnus_summary(pulse: PulseSequence, modes: TrapModes, detuning,
                   theta_target=np.pi / 4) -> MagnusSummary:
    """Evaluate beta, theta and the cost for trap modes with Lamb-Dicke data."""
    if modes.lamb_dicke is None:
        raise ValueError("TrapModes.lamb_dicke must be set (use lamb_dicke_matrix)")
    deltas = detuning - modes.frequencies
    beta = magnus_beta(pulse, modes.lamb_dicke, deltas)
    theta = magnus_theta(pulse, modes.lamb_dicke, deltas)
    cost = float(np.sum(beta**2) + abs(theta[0, 1] - theta_target))
    return MagnusSummary(beta=beta, theta=theta, cost=cost)
