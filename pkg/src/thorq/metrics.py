"""Entanglement indicators for two-qubit states.

Three complementary measures quantify the generated entanglement:
the base-2 entropy of the one-qubit reduction, the Uhlmann fidelity
against a target state, and the negativity built from the partial
transpose.  partial_trace_phonons reduces a full qubits-plus-modes state
to its 4x4 (or 2x2) qubit block first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PhysicsError
from .two_ion import HilbertSpace

EIG_CLAMP = 1e-10


def partial_trace_phonons(full, space: HilbertSpace):
    """Trace out the phonon modes of a full density matrix."""
    full = np.asarray(full, dtype=complex)
    nq = 2 ** space.qubit_count
    nph = space.phonon_dim
    if full.shape != (nq * nph, nq * nph):
        raise PhysicsError(
            f"state dimension {full.shape} does not match the Hilbert space "
            f"({nq * nph})")
    resh = full.reshape(nq, nph, nq, nph)
    reduced = np.einsum("apbp->ab", resh)
    tr = np.trace(reduced)
    if abs(tr - np.trace(full)) > 1e-10:
        raise NumericalError("partial trace changed the total trace")
    return reduced


def partial_trace_qubit(rho_ab, keep=0):
    """Reduce a two-qubit state to one qubit (keep = 0 or 1)."""
    rho = np.asarray(rho_ab, dtype=complex).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("apbp->ab", rho)
    return np.einsum("papb->ab", rho)


def _clamped_eigh(rho):
    vals, vecs = np.linalg.eigh(0.5 * (rho + np.asarray(rho).conj().T))
    if vals.min() < -1e-8:
        raise NumericalError(f"state has eigenvalue {vals.min():.3e}; not a density matrix")
    return np.clip(vals, 0.0, None), vecs


def entanglement_entropy(rho_ab):
    """S = -Tr(rho_A log2 rho_A) of the first-qubit reduction."""
    rho_a = partial_trace_qubit(rho_ab, keep=0)
    vals, _ = _clamped_eigh(rho_a)
    vals = vals[vals > EIG_CLAMP]
    return float(-np.sum(vals * np.log2(vals)))


def state_entropy(rho):
    """Base-2 von Neumann entropy of an arbitrary density matrix."""
    vals, _ = _clamped_eigh(rho)
    vals = vals[vals > EIG_CLAMP]
    return float(-np.sum(vals * np.log2(vals)))


def _sqrtm_psd(rho):
    vals, vecs = _clamped_eigh(rho)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def uhlmann_fidelity(rho, sigma):
    """F = [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.

    Pure arguments take the exact overlap path <psi|other|psi>, which is
    both faster and free of the sqrt round-off the general route carries.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise PhysicsError("fidelity arguments must share a dimension")
    for pure, other in ((rho, sigma), (sigma, rho)):
        if abs(np.real(np.sum(pure * pure.T)) - 1.0) < 1e-12:
            vals, vecs = _clamped_eigh(pure)
            psi = vecs[:, -1]
            return float(np.real(psi.conj() @ other @ psi))
    root = _sqrtm_psd(rho)
    inner = root @ sigma @ root
    vals, _ = _clamped_eigh(inner)
    return float(np.sum(np.sqrt(vals)) ** 2)


def negativity(rho_ab):
    """N = (||rho^{T_B}||_1 - 1)/2, partial transpose over the second qubit."""
    rho = np.asarray(rho_ab, dtype=complex).reshape(2, 2, 2, 2)
    rho_pt = rho.transpose(0, 3, 2, 1).reshape(4, 4)
    vals = np.linalg.eigvalsh(0.5 * (rho_pt + rho_pt.conj().T))
    return float(0.5 * (np.sum(np.abs(vals)) - 1.0))


def trace_distance(rho, sigma):
    """(1/2) ||rho - sigma||_1."""
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    vals = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.sum(np.abs(vals)))


@dataclass
class MetricSeries:
    """Time series of the three indicators along a trajectory."""

    times: np.ndarray
    entropy: np.ndarray
    fidelity: np.ndarray
    negativity: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.entropy)
        f = np.asarray(self.fidelity)
        n = np.asarray(self.negativity)
        if s.min() < -1e-8 or s.max() > 2.0 + 1e-8:
            raise NumericalError("entropy out of [0, 2]")
        if f.min() < -1e-8 or f.max() > 1.0 + 1e-8:
            raise NumericalError("fidelity out of [0, 1]")
        if n.min() < -1e-8 or n.max() > 0.5 + 1e-8:
            raise NumericalError("negativity out of [0, 0.5]")


def metric_series(times, qubit_states, target) -> MetricSeries:
    """Evaluate all three indicators along a trajectory of 4x4 states."""
    target = np.asarray(target, dtype=complex)
    if target.ndim == 1:
        target = np.outer(target, target.conj())
    ent, fid, neg = [], [], []
    for rho in qubit_states:
        ent.append(entanglement_entropy(rho))
        fid.append(uhlmann_fidelity(rho, target))
        neg.append(negativity(rho))
    return MetricSeries(np.asarray(times, dtype=float), np.array(ent),
                        np.array(fid), np.array(neg))
