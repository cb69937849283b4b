"""Density-matrix helpers shared by the solvers and the metrics."""

import numpy as np

from .errors import NumericalError

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
EIGENVALUE_TOL = 1e-8


def validate_density_matrix(rho, trace_tol=TRACE_TOL, herm_tol=HERMITICITY_TOL,
                            eig_tol=EIGENVALUE_TOL, context=""):
    """Check Hermiticity, unit trace and positivity; raise NumericalError otherwise."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise NumericalError(f"{context} state not Hermitian (defect {herm:.3e})")
    tr = float(abs(np.trace(rho).real - 1.0))
    if tr > trace_tol:
        raise NumericalError(f"{context} state trace deviates by {tr:.3e}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if min_eig < -eig_tol:
        raise NumericalError(f"{context} state has eigenvalue {min_eig:.3e}")
    return herm, tr, min_eig


def purity(rho):
    """Tr(rho^2)."""
    rho = np.asarray(rho)
    return float(np.real(np.sum(rho * rho.T)))


def ket(index, dim):
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def bell_state():
    """(|00> + i|11>)/sqrt(2) as a two-qubit ket (basis |00>,|01>,|10>,|11>)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0 / np.sqrt(2.0)
    psi[3] = 1j / np.sqrt(2.0)
    return psi
