"""Open-system propagation of the sideband-driven ion chain.

The drive Hamiltonian in the sideband interaction picture is

    H(t) = Sum_{j,p} eta_jp V_j(t) sx_j (a_p e^{i (delta_p t + phi_j(t))}
                                          + h.c. (with a -pi/2 quadrature offset)

with delta_p = Delta - omega_p; its position-quadrature component is
V eta sin(phi + delta_p t) sx (a + a+).  Dissipation is per-ion isomer
decay (rate Gamma_ge, jump |g><e|) and laser dephasing (sz channel,
coherence decay 2 Gamma_l per ion, optionally collective).

Numerical scheme
----------------
In the frame rotating with exp(i Sum_p delta_p t n_p) the Hamiltonian is
constant on every pulse segment, and it is block-diagonal over the sx
eigenbasis of the qubits: each spin sector evolves under a pure phonon
Hamiltonian

    h_s = -Sum_p delta_p n_p + Sum_p (c_sp a_p + conj(c_sp) a_p+),
    c_sp = Sum_j s_j (-i) eta_jp V_jk e^{i phi_jk},  s_j in {+1, -1}.

One eigendecomposition per (segment, sector) then gives the exact
propagator for any sub-step.  Noise enters by Strang splitting against
the exactly integrated qubit-local channels, so every step is a
composition of CPTP maps and the state stays physical by construction;
step halving controls the splitting error (the only error source).
Noise-free runs take whole segments in a single exact step.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import PhysicsError, TruncationError
from .physics import TrapModes
from .pulses import PulseSequence
from .single_ion import NoiseModel
from .states import validate_density_matrix

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
DEFAULT_NOISY_STEP = 1.0e-6      # s
LEAKAGE_LIMIT = 1e-4             # top-Fock-level population prompting a larger n_max


@dataclass(frozen=True)
class HilbertSpace:
    """Qubits plus truncated phonon modes."""

    qubit_count: int = 2
    phonon_mode_count: int = 2
    fock_cutoff: int = 6

    def __post_init__(self):
        if self.qubit_count not in (1, 2):
            raise PhysicsError("qubit_count must be 1 or 2")
        if self.phonon_mode_count not in (0, 1, 2):
            raise PhysicsError("phonon_mode_count must be 0, 1 or 2")
        if self.phonon_mode_count and self.fock_cutoff < 1:
            raise PhysicsError("fock_cutoff must be >= 1 when modes are present")

    @property
    def levels_per_mode(self):
        return self.fock_cutoff + 1

    @property
    def phonon_dim(self):
        return self.levels_per_mode ** self.phonon_mode_count

    @property
    def dimension(self):
        return 2 ** self.qubit_count * self.phonon_dim


@dataclass
class GateTrajectory:
    """Recorded gate evolution on a time grid.

    qubit_states holds the reduced qubit density matrix (z basis) at each
    time; mode_occupations and top_level_population are per-mode arrays.
    full_states is populated only when requested.
    """

    times: np.ndarray
    qubit_states: np.ndarray
    mode_occupations: np.ndarray
    top_level_population: np.ndarray
    purity: np.ndarray
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    full_states: list | None = None
    space: HilbertSpace | None = None
    fitted: dict = field(default_factory=dict)

    def final_qubit_state(self):
        return self.qubit_states[-1]


def _mode_operators(space: HilbertSpace):
    n = space.levels_per_mode
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)
    eye = np.eye(n, dtype=complex)
    ops = []
    for p in range(space.phonon_mode_count):
        factors = [eye] * space.phonon_mode_count
        factors[p] = a
        out = factors[0]
        for f in factors[1:]:
            out = np.kron(out, f)
        ops.append(out)
    if not ops:
        return [np.zeros((1, 1), dtype=complex)][:0]
    return ops


def _single_qubit_channel(noise: NoiseModel, h):
    """Exact 4x4 map on (i, i') z-basis components for one qubit over time h."""
    decay = np.exp(-noise.decay_rate * h)
    coher = np.exp(-(0.5 * noise.decay_rate + 2.0 * noise.laser_rate) * h)
    m = np.zeros((2, 2, 2, 2))
    m[0, 0, 0, 0] = 1.0
    m[0, 0, 1, 1] = 1.0 - decay
    m[1, 1, 1, 1] = decay
    m[0, 1, 0, 1] = coher
    m[1, 0, 1, 0] = coher
    return m


def _spin_channel_x(space: HilbertSpace, noise: NoiseModel, h):
    """Channel on the spin block labels, expressed in the sx eigenbasis.

    Returns (S, S, S, S) with S = 2^nq: new blocks[S1, S2] =
    sum over old labels of C[S1, S2, T1, T2] blocks[T1, T2].
    """
    nq = space.qubit_count
    if noise.correlated_dephasing and nq == 2:
        # decay per qubit; the collective dephasing factor is applied below
        single = _single_qubit_channel(NoiseModel(noise.decay_rate, 0.0), h)
    else:
        single = _single_qubit_channel(noise, h)
    # combine qubits in z basis
    if nq == 1:
        cz = single
    else:
        cz = np.einsum("aces,bdft->abcdefst", single, single)
        cz = cz.reshape(4, 4, 4, 4)
        if noise.correlated_dephasing:
            # collective sz channel: components decay at (Gamma_l/2)(m - m')^2
            mvals = np.array([-2.0, 0.0, 0.0, 2.0])   # sz sums for |00>,|01>,|10>,|11>
            factor = np.exp(-0.5 * noise.laser_rate * h
                            * (mvals[:, None] - mvals[None, :]) ** 2)
            cz = cz * factor[:, :, None, None]
    # conjugate every component index pair into the x basis
    dim = 2 ** nq
    w = _HADAMARD
    for _ in range(nq - 1):
        w = np.kron(_HADAMARD, w)
    # rho_x = W rho_z W (W real symmetric involution)
    cx = np.einsum("ab,cd,bdef,eg,fh->acgh", w, w, cz, w, w)
    return cx.reshape(dim, dim, dim, dim)


def _sector_signs(nq):
    """sx eigenvalues per sector label, shape (2^nq, nq)."""
    return np.array([[1.0 if b == 0 else -1.0 for b in bits]
                     for bits in itertools.product((0, 1), repeat=nq)])


class _RotatingFramePropagator:
    """Per-segment exact propagators in the detuning-rotating frame."""

    def __init__(self, pulse, eta, deltas, space):
        self.space = space
        self.deltas = np.asarray(deltas, dtype=float)
        self.eta = np.asarray(eta, dtype=float)
        self.edges = pulse.edges
        self.pulse = pulse
        self.signs = _sector_signs(space.qubit_count)
        aops = _mode_operators(space)
        nums = [op.conj().T @ op for op in aops]
        self._drift = sum((-self.deltas[p]) * nums[p]
                          for p in range(space.phonon_mode_count)) \
            if space.phonon_mode_count else np.zeros((1, 1), dtype=complex)
        self._aops = aops
        self._eig = {}

    def segment_eig(self, k, sector):
        key = (k, sector)
        if key not in self._eig:
            h = np.array(self._drift, dtype=complex, copy=True)
            for p in range(self.space.phonon_mode_count):
                c = 0.0 + 0.0j
                for j in range(self.space.qubit_count):
                    c += self.signs[sector, j] * (-1j) * self.eta[j, p] \
                        * self.pulse.amplitudes[j, k] \
                        * np.exp(1j * self.pulse.phases[j, k])
                h += c * self._aops[p] + np.conj(c) * self._aops[p].conj().T
            vals, vecs = np.linalg.eigh(h)
            self._eig[key] = (vals, vecs)
        return self._eig[key]

    def step_unitaries(self, k, dt):
        """Stacked sector propagators exp(-i h_s dt), shape (S, nph, nph)."""
        out = []
        for s in range(2 ** self.space.qubit_count):
            vals, vecs = self.segment_eig(k, s)
            out.append((vecs * np.exp(-1j * vals * dt)) @ vecs.conj().T)
        return np.array(out)

    def frame_phases(self, t):
        """Diagonal of the frame rotation S(t) = exp(i sum_p delta_p t n_p)."""
        nph = self.space.phonon_dim
        diag = np.zeros(nph)
        if self.space.phonon_mode_count:
            n = self.space.levels_per_mode
            counts = [np.arange(n)] * self.space.phonon_mode_count
            grid = np.meshgrid(*counts, indexing="ij")
            for p in range(self.space.phonon_mode_count):
                diag = diag + self.deltas[p] * grid[p].ravel()
        return np.exp(1j * diag * t)


def _blocks_to_full(blocks, propagator, t):
    """x-basis blocks -> full density matrix in the z basis at lab time t."""
    space = propagator.space
    ns = 2 ** space.qubit_count
    nph = space.phonon_dim
    full_x = blocks.transpose(0, 2, 1, 3).reshape(ns * nph, ns * nph)
    w = _HADAMARD
    for _ in range(space.qubit_count - 1):
        w = np.kron(_HADAMARD, w)
    wfull = np.kron(w, np.eye(nph))
    full_z = wfull @ full_x @ wfull
    # undo the rotating frame: rho = S(t)^dag rho_tilde S(t)
    phases = np.conj(propagator.frame_phases(t))
    pvec = np.tile(phases, ns)
    return (pvec[:, None] * full_z) * np.conj(pvec)[None, :]


def evolve_two_ion_gate(pulse: PulseSequence, modes: TrapModes,
                        noise: NoiseModel, space: HilbertSpace, t_grid,
                        detuning, drift=0.0, initial_qubit=None,
                        step=None, keep_full=False, validate=True,
                        leakage_limit=LEAKAGE_LIMIT) -> GateTrajectory:
    """Propagate the Lindblad dynamics of the driven chain and record rho.

    detuning is the carrier detuning Delta (rad/s); drift is an additive
    offset used by robustness scans.  initial_qubit: ket or density matrix
    on the qubits (default |0...0>); phonons start in vacuum.  step sets
    the Strang sub-step for noisy runs (noise-free runs are exact per
    segment).  Raises TruncationError when the top Fock level of any mode
    accumulates more than ``leakage_limit`` population.
    """
    if modes.lamb_dicke is None:
        raise PhysicsError("TrapModes.lamb_dicke must be set (use lamb_dicke_matrix)")
    eta = np.asarray(modes.lamb_dicke, dtype=float)
    if eta.shape[0] < space.qubit_count or eta.shape[1] < space.phonon_mode_count:
        raise PhysicsError("Lamb-Dicke matrix smaller than the requested space")
    eta = eta[:space.qubit_count, :space.phonon_mode_count]
    freqs = np.asarray(modes.frequencies, dtype=float)[:space.phonon_mode_count]
    deltas = (detuning + drift) - freqs
    if pulse.n_ions != space.qubit_count:
        raise PhysicsError("pulse ion count does not match the Hilbert space")

    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) < 0) or t_grid[0] < 0:
        raise PhysicsError("t_grid must be sorted and non-negative")
    tau = pulse.total_duration
    if t_grid[-1] > tau + 1e-12:
        raise PhysicsError("t_grid extends beyond the pulse duration")

    ns = 2 ** space.qubit_count
    nph = space.phonon_dim
    prop = _RotatingFramePropagator(pulse, eta, deltas, space)

    # initial state: qubits (x basis) (x) phonon vacuum
    if initial_qubit is None:
        qvec = np.zeros(ns, dtype=complex)
        qvec[0] = 1.0
        qmat = np.outer(qvec, qvec.conj())
    else:
        initial_qubit = np.asarray(initial_qubit, dtype=complex)
        qmat = np.outer(initial_qubit, initial_qubit.conj()) \
            if initial_qubit.ndim == 1 else initial_qubit
        if qmat.shape != (ns, ns):
            raise PhysicsError("initial qubit state has the wrong dimension")
    w = _HADAMARD
    for _ in range(space.qubit_count - 1):
        w = np.kron(_HADAMARD, w)
    qmat_x = w @ qmat @ w
    vac = np.zeros(nph, dtype=complex)
    vac[0] = 1.0
    blocks = qmat_x[:, :, None, None] * np.outer(vac, vac.conj())[None, None, :, :]

    noisy = noise.decay_rate > 0 or noise.laser_rate > 0
    if step is None:
        step = DEFAULT_NOISY_STEP

    # breakpoints: union of record times and segment edges
    edges = pulse.edges
    points = np.unique(np.concatenate([t_grid, edges[edges <= t_grid[-1] + 1e-15]]))
    record_set = set(np.round(t_grid, 15))

    n = space.levels_per_mode
    top_masks = []
    if space.phonon_mode_count:
        counts = np.meshgrid(*([np.arange(n)] * space.phonon_mode_count), indexing="ij")
        for p in range(space.phonon_mode_count):
            top_masks.append((counts[p].ravel() == n - 1).astype(float))
        occ_diag = [counts[p].ravel().astype(float) for p in range(space.phonon_mode_count)]
    else:
        occ_diag = []

    records = {"t": [], "q": [], "occ": [], "top": [], "pur": [],
               "tr": [], "herm": [], "mineig": [], "full": []}

    def record(t, blocks):
        full = _blocks_to_full(blocks, prop, t)
        tr = float(np.real(np.trace(full)))
        herm = float(np.max(np.abs(full - full.conj().T)))
        mineig = float(np.linalg.eigvalsh(0.5 * (full + full.conj().T))[0])
        pur = float(np.real(np.sum(full * full.T)))
        # reduced qubit state and phonon observables
        resh = full.reshape(ns, nph, ns, nph)
        qred = np.einsum("apbp->ab", resh)
        ph_diag = np.real(np.einsum("apap->p", resh))
        occ = [float(np.dot(ph_diag, occ_diag[p])) for p in range(space.phonon_mode_count)]
        top = [float(np.dot(ph_diag, top_masks[p])) for p in range(space.phonon_mode_count)]
        if validate:
            validate_density_matrix(full, context=f"gate t={t:.6g}:")
        for p, val in enumerate(top):
            if val > leakage_limit:
                raise TruncationError(
                    f"mode {p} top Fock level holds {val:.3e} population at "
                    f"t={t:.6g}; increase fock_cutoff")
        records["t"].append(t)
        records["q"].append(qred)
        records["occ"].append(occ)
        records["top"].append(top)
        records["pur"].append(pur)
        records["tr"].append(abs(tr - 1.0))
        records["herm"].append(herm)
        records["mineig"].append(mineig)
        if keep_full:
            records["full"].append(full)

    if np.round(points[0], 15) in record_set:
        record(points[0], blocks)

    t_now = points[0]
    for t_next in points[1:]:
        span = t_next - t_now
        if span <= 1e-18:
            t_now = t_next
            continue
        k = min(pulse.n_segments - 1,
                max(0, int(np.searchsorted(edges, t_now + 0.5 * span, side="right") - 1)))
        if noisy:
            nsub = max(1, int(np.ceil(span / step)))
            h = span / nsub
            us = prop.step_unitaries(k, h)
            ud = us.conj().transpose(0, 2, 1).copy()
            chan = _spin_channel_x(space, noise, 0.5 * h).reshape(ns * ns, ns * ns)
            for _ in range(nsub):
                b = (chan @ blocks.reshape(ns * ns, -1)).reshape(ns, ns, nph, nph)
                x = np.matmul(us, b.transpose(0, 2, 1, 3).reshape(ns, nph, ns * nph))
                b = x.reshape(ns, nph, ns, nph).transpose(0, 2, 1, 3)
                y = np.matmul(np.ascontiguousarray(b.transpose(1, 0, 2, 3))
                              .reshape(ns, ns * nph, nph), ud)
                b = y.reshape(ns, ns, nph, nph).transpose(1, 0, 2, 3)
                blocks = (chan @ np.ascontiguousarray(b).reshape(ns * ns, -1)) \
                    .reshape(ns, ns, nph, nph)
        else:
            us = prop.step_unitaries(k, span)
            blocks = np.matmul(us[:, None, :, :], blocks)
            blocks = np.matmul(blocks, us.conj().transpose(0, 2, 1)[None, :, :, :])
        t_now = t_next
        if np.round(t_next, 15) in record_set:
            record(t_next, blocks)

    return GateTrajectory(
        times=np.array(records["t"]),
        qubit_states=np.array(records["q"]),
        mode_occupations=np.array(records["occ"]).reshape(len(records["t"]), -1),
        top_level_population=np.array(records["top"]).reshape(len(records["t"]), -1),
        purity=np.array(records["pur"]),
        trace_error=np.array(records["tr"]),
        hermiticity_error=np.array(records["herm"]),
        min_eigenvalue=np.array(records["mineig"]),
        full_states=records["full"] if keep_full else None,
        space=space,
    )
