"""Piecewise-constant drive pulses and their serialization.

A pulse stores, per ion, one (amplitude, phase) pair per segment on a
shared segment grid.  Amplitudes are the coupling V = Omega/2 in rad/s
(the file format spells this out).  Serialization uses ``repr`` floats so
a write/read round trip is bit exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PhysicsError

GRID_TOLERANCE = 1e-12   # seconds


@dataclass(frozen=True)
class PulseSegment:
    """One constant-drive interval: coupling V (rad/s), phase (rad), duration (s)."""

    amplitude: float
    phase: float
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise PhysicsError("segment duration must be > 0")


@dataclass(frozen=True)
class PulseSequence:
    """Per-ion piecewise-constant pulse on a shared segment grid.

    amplitudes, phases: (n_ions, n_segments) arrays.  durations:
    (n_segments,) shared by all ions.  total_duration is checked against
    the sum of durations to 1e-12 s.
    """

    durations: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    total_duration: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dur = np.asarray(self.durations, dtype=float)
        amp = np.asarray(self.amplitudes, dtype=float)
        ph = np.asarray(self.phases, dtype=float)
        if dur.ndim != 1 or np.any(dur <= 0):
            raise PhysicsError("durations must be a 1-D array of positive values")
        if amp.shape != ph.shape or amp.ndim != 2 or amp.shape[1] != dur.size:
            raise PhysicsError("amplitudes/phases must be (n_ions, n_segments)")
        if abs(dur.sum() - self.total_duration) > GRID_TOLERANCE:
            raise PhysicsError(
                f"segment durations sum to {dur.sum():.15g}, expected "
                f"{self.total_duration:.15g}")
        object.__setattr__(self, "durations", dur)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "phases", ph)

    @property
    def n_ions(self):
        return self.amplitudes.shape[0]

    @property
    def n_segments(self):
        return self.durations.size

    @property
    def edges(self):
        """Segment boundaries, length n_segments + 1, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def segments(self, ion):
        """Segments of one ion as PulseSegment objects."""
        return [PulseSegment(self.amplitudes[ion, k], self.phases[ion, k],
                             self.durations[k])
                for k in range(self.n_segments)]

    def check_amplitude_bounds(self, v_min, v_max):
        if np.any(self.amplitudes < v_min - 1e-9) or np.any(self.amplitudes > v_max + 1e-9):
            raise PhysicsError("pulse amplitudes violate the configured bounds")


def uniform_pulse(n_ions, n_segments, total_duration, amplitudes, phases):
    """Build a pulse on a uniform segment grid from (n_ions, n_segments) arrays."""
    durations = np.full(n_segments, total_duration / n_segments)
    # make the durations sum exactly to total_duration
    durations[-1] = total_duration - durations[:-1].sum()
    return PulseSequence(durations, np.asarray(amplitudes, dtype=float),
                         np.asarray(phases, dtype=float), total_duration)


def save_pulse(pulse: PulseSequence, path, header=None):
    """Write a pulse to a structured text file.

    Header lines carry gate context (total duration, detuning, mode
    frequencies, Lamb-Dicke matrix, seed) when provided.  Amplitude
    columns store the coupling V = Omega/2 in rad/s.
    """
    header = dict(header or {})
    lines = ["# thorq pulse sequence v1",
             "# columns: duration_s rabi_amplitude_rad_s phase_rad "
             "(amplitude is V = Omega/2)"]
    lines.append(f"total_duration_s = {float(pulse.total_duration)!r}")
    lines.append(f"n_ions = {pulse.n_ions}")
    lines.append(f"n_segments = {pulse.n_segments}")
    if "seed" in header:
        lines.append(f"seed = {int(header.pop('seed'))}")
    if "detuning_rad_s" in header:
        lines.append(f"detuning_rad_s = {float(header.pop('detuning_rad_s'))!r}")
    if "mode_frequencies_rad_s" in header:
        vals = " ".join(repr(float(v)) for v in header.pop("mode_frequencies_rad_s"))
        lines.append(f"mode_frequencies_rad_s = {vals}")
    if "lamb_dicke" in header:
        eta = np.asarray(header.pop("lamb_dicke"), dtype=float)
        for j, row in enumerate(eta):
            lines.append(f"lamb_dicke_row{j} = " + " ".join(repr(float(v)) for v in row))
    for key, value in sorted(header.items()):
        value = float(value) if isinstance(value, (int, float, np.floating)) else value
        lines.append(f"{key} = {value!r}")
    for j in range(pulse.n_ions):
        lines.append(f"[ion {j}]")
        for k in range(pulse.n_segments):
            lines.append(f"{float(pulse.durations[k])!r} "
                         f"{float(pulse.amplitudes[j, k])!r} "
                         f"{float(pulse.phases[j, k])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pulse(path) -> PulseSequence:
    """Read a pulse written by :func:`save_pulse`."""
    meta = {}
    rows = {}
    current_ion = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[ion"):
                try:
                    current_ion = int(line.strip("[]").split()[1])
                except (IndexError, ValueError) as exc:
                    raise ConfigError(f"bad ion section header: {line!r}") from exc
                rows[current_ion] = []
                continue
            if "=" in line:
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
                continue
            if current_ion is None:
                raise ConfigError(f"segment row outside an ion section: {line!r}")
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"segment row must have 3 columns: {line!r}")
            rows[current_ion].append(tuple(float(p) for p in parts))
    try:
        n_ions = int(meta["n_ions"])
        n_segments = int(meta["n_segments"])
        total = float(meta["total_duration_s"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"pulse file missing or malformed header field: {exc}") from exc
    if sorted(rows) != list(range(n_ions)):
        raise ConfigError("pulse file ion sections do not match n_ions")
    durations = None
    amplitudes = np.empty((n_ions, n_segments))
    phases = np.empty((n_ions, n_segments))
    for j in range(n_ions):
        if len(rows[j]) != n_segments:
            raise ConfigError(f"ion {j} has {len(rows[j])} segments, expected {n_segments}")
        data = np.array(rows[j])
        if durations is None:
            durations = data[:, 0]
        elif not np.array_equal(durations, data[:, 0]):
            raise ConfigError("ions disagree on the segment grid")
        amplitudes[j] = data[:, 1]
        phases[j] = data[:, 2]
    metadata = {}
    for key, value in meta.items():
        if key in ("n_ions", "n_segments", "total_duration_s"):
            continue
        if key == "mode_frequencies_rad_s":
            metadata[key] = np.array([float(v) for v in value.split()])
        elif key.startswith("lamb_dicke_row"):
            metadata.setdefault("lamb_dicke_rows", {})[int(key[14:])] = \
                np.array([float(v) for v in value.split()])
        elif key == "seed":
            metadata[key] = int(value)
        else:
            try:
                metadata[key] = float(value)
            except ValueError:
                metadata[key] = value.strip("'\"")
    if "lamb_dicke_rows" in metadata:
        rows_ld = metadata.pop("lamb_dicke_rows")
        metadata["lamb_dicke"] = np.array([rows_ld[j] for j in sorted(rows_ld)])
    return PulseSequence(durations, amplitudes, phases, total, metadata)
