"""Config-file parsing with strict unit validation.

Every dimensioned value in a config file must carry a unit suffix from
the whitelist below; bare numbers are accepted only for dimensionless
fields.  Frequencies (``Hz``-family on frequency-typed fields) are
ordinary cycles/s in the file and converted to angular rad/s internally.
Rates (decay, dephasing) are plain 1/s; ``Hz`` is accepted there as a
synonym of 1/s without a 2*pi factor.  Unknown sections or keys are
rejected.
"""

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .constants import ATOMIC_MASS
from .errors import ConfigError
from .physics import DEFAULT_WAVELENGTH, LaserConfig, NuclearTransition, TrapConfig
from .single_ion import NoiseModel
from .two_ion import HilbertSpace

EXPERIMENTS = ("modes", "rabi", "ramsey", "t1t2-scan", "optimize-pulse",
               "simulate-gate", "robustness-scan", "metrics", "eb")

# unit whitelist: dimension -> {suffix: factor to SI}
UNITS = {
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "mass": {"kg": 1.0, "u": ATOMIC_MASS},
    # frequency-typed fields: file value is cycles/s, stored as rad/s
    "frequency": {"Hz": 2 * math.pi, "kHz": 2 * math.pi * 1e3,
                  "MHz": 2 * math.pi * 1e6, "GHz": 2 * math.pi * 1e9},
    # rates carry no 2*pi
    "rate": {"1/s": 1.0, "Hz": 1.0, "kHz": 1e3, "mHz": 1e-3},
    "none": None,
}

# section -> key -> (dimension, default).  REQUIRED means no default.
REQUIRED = object()
SCHEMA = {
    "run": {"experiment": ("choice", REQUIRED), "seed": ("int", 0)},
    "laser": {
        "power": ("power", 30e-6),
        "wavelength": ("length", DEFAULT_WAVELENGTH),
        "beam_waist": ("length", 1.5e-6),
        "detuning": ("frequency", 2 * math.pi * 2.04e6),
        "phase_noise_rate": ("rate", 0.0),
        "drift_offset": ("frequency", 0.0),
    },
    "trap": {
        "ion_mass": ("mass", 229 * ATOMIC_MASS),
        "charge_number": ("int", 3),
        "axial_frequency": ("frequency", 2 * math.pi * 1.2e6),
        "ion_count": ("int", 2),
    },
    "transition": {
        "decay_rate": ("rate", 1.25e-4),
        "wavelength": ("length", DEFAULT_WAVELENGTH),
    },
    "noise": {
        "decay_rate": ("rate", None),       # defaults to transition decay rate
        "laser_rate": ("rate", None),       # defaults to laser phase noise rate
        "correlated_dephasing": ("bool", False),
    },
    "space": {
        "fock_cutoff": ("int", 6),
        "phonon_modes": ("int", 2),
    },
    "gate": {
        "tau": ("time", 100e-3),
        "segments": ("int", 40),
        "rabi_min": ("frequency", 2 * math.pi * 3e3),
        "rabi_max": ("frequency", 2 * math.pi * 20e3),
        "pulse_file": ("path", None),
        "step": ("time", None),
    },
    "scan": {
        "drift_span": ("frequency", 2 * math.pi * 1.2e3),
        "drift_points": ("int", 25),
        "laser_rates": ("rate_list", (0.1, 1.0, 10.0, 100.0)),
    },
    "experiment": {
        "rabi_frequency": ("frequency", None),   # default: derived from laser
        "ramsey_detuning": ("frequency", 2 * math.pi * 100.0),
        "points": ("int", 1200),
    },
    "eb": {
        "channels_file": ("path", None),
        "nuclear_element": ("au", 0.65),
        "spin_excited": ("float", 1.5),
        "j_initial": ("float", 2.5),
        "photon_frequency": ("angular", None),
        "target_time": ("time", None),
    },
    "output": {"directory": ("path", None)},
}


@dataclass
class RunConfig:
    """Fully parsed and unit-normalized run configuration."""

    experiment: str
    seed: int
    laser: LaserConfig
    trap: TrapConfig
    transition: NuclearTransition
    noise: NoiseModel
    space: HilbertSpace
    gate: dict
    scan: dict
    single_ion: dict
    eb: dict
    output_dir: Path | None
    raw_text: str = ""
    extras: dict = field(default_factory=dict)


def _parse_value(section, key, raw, dimension):
    where = f"[{section}] {key}"
    raw = raw.strip()
    if dimension == "choice":
        if raw not in EXPERIMENTS:
            raise ConfigError(f"{where}: unknown experiment {raw!r} "
                              f"(choose from {', '.join(EXPERIMENTS)})")
        return raw
    if dimension == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from exc
    if dimension == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from exc
    if dimension == "bool":
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if dimension == "path":
        return Path(raw)
    if dimension == "au":
        parts = raw.split()
        if len(parts) != 2 or parts[1] != "au":
            raise ConfigError(f"{where}: expected '<value> au', got {raw!r}")
        return float(parts[0])
    if dimension == "angular":
        parts = raw.split()
        if len(parts) != 2:
            raise ConfigError(f"{where}: missing unit suffix in {raw!r}")
        num, unit = parts
        if unit == "rad/s":
            return float(num)
        if unit in UNITS["frequency"]:
            return float(num) * UNITS["frequency"][unit]
        raise ConfigError(f"{where}: unit {unit!r} is not an angular frequency")
    if dimension == "rate_list":
        vals = []
        for item in raw.split(","):
            vals.append(_parse_value(section, key, item.strip(), "rate"))
        return tuple(vals)
    table = UNITS.get(dimension)
    if table is None:
        raise ConfigError(f"{where}: unsupported dimension {dimension!r}")
    parts = raw.split()
    if len(parts) != 2:
        raise ConfigError(f"{where}: value {raw!r} must be '<number> <unit>'")
    num, unit = parts
    if unit not in table:
        raise ConfigError(
            f"{where}: unit {unit!r} invalid for {dimension} "
            f"(allowed: {', '.join(table)})")
    try:
        return float(num) * table[unit]
    except ValueError as exc:
        raise ConfigError(f"{where}: bad number {num!r}") from exc


def parse_config(path) -> RunConfig:
    """Parse and validate a config file into a RunConfig."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            dim, _ = SCHEMA[section][key]
            values[(section, key)] = _parse_value(section, key, raw, dim)

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        dim, default = SCHEMA[section][key]
        if default is REQUIRED:
            raise ConfigError(f"missing required key [{section}] {key}")
        return default

    experiment = get("run", "experiment")
    laser = LaserConfig(
        power=get("laser", "power"),
        wavelength=get("laser", "wavelength"),
        beam_waist=get("laser", "beam_waist"),
        detuning=get("laser", "detuning"),
        phase_noise_rate=get("laser", "phase_noise_rate"),
        drift_offset=get("laser", "drift_offset"),
    )
    trap = TrapConfig(
        ion_mass=get("trap", "ion_mass"),
        charge_number=get("trap", "charge_number"),
        axial_frequency=get("trap", "axial_frequency"),
        ion_count=get("trap", "ion_count"),
    )
    transition = NuclearTransition(
        decay_rate=get("transition", "decay_rate"),
        wavelength=get("transition", "wavelength"),
    )
    decay = get("noise", "decay_rate")
    laser_rate = get("noise", "laser_rate")
    noise = NoiseModel(
        decay_rate=transition.decay_rate if decay is None else decay,
        laser_rate=laser.phase_noise_rate if laser_rate is None else laser_rate,
        correlated_dephasing=get("noise", "correlated_dephasing"),
    )
    space = HilbertSpace(
        qubit_count=min(trap.ion_count, 2),
        phonon_mode_count=get("space", "phonon_modes"),
        fock_cutoff=get("space", "fock_cutoff"),
    )
    gate = {k: get("gate", k) for k in SCHEMA["gate"]}
    scan = {k: get("scan", k) for k in SCHEMA["scan"]}
    single = {k: get("experiment", k) for k in SCHEMA["experiment"]}
    eb = {k: get("eb", k) for k in SCHEMA["eb"]}
    outdir = get("output", "directory")

    for key in ("pulse_file",):
        if gate[key] is not None:
            candidate = Path(gate[key])
            if not candidate.is_absolute():
                candidate = path.parent / candidate
            if not candidate.exists():
                raise ConfigError(f"[gate] pulse_file {candidate} does not exist")
            gate[key] = candidate
    if eb["channels_file"] is not None:
        candidate = Path(eb["channels_file"])
        if not candidate.is_absolute():
            candidate = path.parent / candidate
        if not candidate.exists():
            raise ConfigError(f"[eb] channels_file {candidate} does not exist")
        eb["channels_file"] = candidate

    return RunConfig(
        experiment=experiment,
        seed=get("run", "seed"),
        laser=laser,
        trap=trap,
        transition=transition,
        noise=noise,
        space=space,
        gate=gate,
        scan=scan,
        single_ion=single,
        eb=eb,
        output_dir=Path(outdir) if outdir is not None else None,
        raw_text=text,
    )
