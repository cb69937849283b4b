"""Batch front-end: config-driven experiments, CSV artifacts, run manifests.

Commands::

    thorq run --config cfg [--out DIR] [--seed N]
    thorq validate --config cfg
    thorq reproduce --preset {fig1,fig3,fig4} [--out DIR]

Standard output carries only the manifest path; structured log events go
to standard error.  Exit codes: 2 config error, 3 physics error,
4 numerical failure, 5 optimizer failure.
"""

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .ebridge import eb_rate, enhancement_factor, load_channels, required_enhancement, \
    spam_time, EbConfig
from .errors import ConfigError, NumericalError, OptimizationError, PhysicsError, \
    ThorqError
from .magnus import magnus_summary
from .metrics import metric_series
from .optimize import OptimizerConfig, gate_fidelity, half_max_window, \
    optimize_pulse, robustness_scan
from .physics import LaserConfig, NuclearTransition, TrapConfig, \
    lamb_dicke_matrix, normal_modes, rabi_frequency, thorium_mass
from .pulses import load_pulse, save_pulse
from .single_ion import NoiseModel, rabi_experiment, ramsey_experiment, t1_experiment
from .states import bell_state
from .two_ion import HilbertSpace, evolve_two_ion_gate

log = logging.getLogger("thorq")


def _setup_logging():
    handler = logging.StreamHandler(sys.stderr)

    class _JsonFormatter(logging.Formatter):
        def format(self, record):
            event = {"ts": round(record.created, 3), "level": record.levelname,
                     "event": record.getMessage()}
            return json.dumps(event)

    handler.setFormatter(_JsonFormatter())
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)


def _worker_count():
    raw = os.environ.get("THORQ_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parallel_map(func, items):
    """Ordered map over independent grid cells with a bounded worker pool."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def write_csv(path, header, rows):
    """Deterministic CSV writer (fixed float format, unix newlines)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, str):
                cells.append(value)
            elif isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            else:
                cells.append(f"{float(value):.12e}")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class Manifest:
    def __init__(self, outdir, config_text, seed):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.config_hash = hashlib.sha256(config_text.encode()).hexdigest()
        self.seed = seed
        self.started = time.time()
        self.artifacts = []

    def add(self, path):
        path = Path(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.artifacts.append({"path": str(path.relative_to(self.outdir)),
                               "sha256": digest})
        log.info(f"artifact {path.name} sha256={digest[:12]}")
        return path

    def write(self, extra=None):
        payload = {
            "config_sha256": self.config_hash,
            "version": __version__,
            "seed": self.seed,
            "started_utc": self.started,
            "finished_utc": time.time(),
            "artifacts": sorted(self.artifacts, key=lambda a: a["path"]),
        }
        if extra:
            payload["summary"] = extra
        path = self.outdir / "manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def _derive(cfg: RunConfig):
    modes = normal_modes(cfg.trap)
    eta = lamb_dicke_matrix(modes, cfg.transition)
    return modes.with_lamb_dicke(eta)


def _single_ion_omega(cfg: RunConfig):
    override = cfg.single_ion.get("rabi_frequency")
    if override is not None:
        return override
    return rabi_frequency(cfg.laser, cfg.transition)


# --------------------------------------------------------------------------
# experiment handlers
# --------------------------------------------------------------------------

def _run_modes(cfg, manifest):
    modes = _derive(cfg)
    rows = []
    for p in range(modes.frequencies.size):
        row = [p, modes.frequencies[p] / (2 * np.pi)]
        row.extend(modes.mode_vectors[:, p])
        row.extend(modes.lamb_dicke[:, p])
        rows.append(row)
    n = modes.mode_vectors.shape[0]
    header = ["mode_index", "frequency_hz"] \
        + [f"zero_point_m_ion{j}" for j in range(n)] \
        + [f"lamb_dicke_ion{j}" for j in range(n)]
    manifest.add(write_csv(manifest.outdir / "modes.csv", header, rows))
    return {"spacing_m": None}


def _run_rabi(cfg, manifest):
    omega = _single_ion_omega(cfg)
    result = rabi_experiment(omega, delta=0.0, noise=cfg.noise)
    manifest.add(write_csv(manifest.outdir / "rabi.csv",
                           ["time_s", "pop_excited"],
                           zip(result.times, result.populations)))
    return {"pi_time_s": result.fitted["pi_time"],
            "rabi_frequency_rad_s": omega}


def _run_ramsey(cfg, manifest):
    delta = cfg.single_ion["ramsey_detuning"]
    result = ramsey_experiment(delta, cfg.noise)
    manifest.add(write_csv(manifest.outdir / "ramsey.csv",
                           ["delay_s", "pop_excited"],
                           zip(result.times, result.populations)))
    return {"t2_s": result.fitted["t2"],
            "fringe_frequency_rad_s": result.fitted["fringe_frequency"]}


def _run_t1t2(cfg, manifest):
    rates = cfg.scan["laser_rates"]

    def cell(rate):
        noise = NoiseModel(decay_rate=cfg.noise.decay_rate, laser_rate=rate)
        t1 = t1_experiment(noise).fitted["t1"]
        t2 = ramsey_experiment(cfg.single_ion["ramsey_detuning"], noise).fitted["t2"]
        return rate, t1, t2

    rows = _parallel_map(cell, list(rates))
    manifest.add(write_csv(manifest.outdir / "t1t2.csv",
                           ["laser_rate_1_s", "t1_s", "t2_s"], rows))
    return {"t1_s": rows[0][1]}


def _optimizer_config(cfg: RunConfig):
    return OptimizerConfig(
        segments=cfg.gate["segments"],
        total_duration=cfg.gate["tau"],
        detuning=cfg.laser.detuning,
        rabi_bounds=(cfg.gate["rabi_min"], cfg.gate["rabi_max"]),
        seed=cfg.seed,
    )


def _run_optimize(cfg, manifest):
    modes = _derive(cfg)
    ocfg = _optimizer_config(cfg)
    pulse = optimize_pulse(modes, ocfg)
    path = manifest.outdir / "pulse.txt"
    save_pulse(pulse, path, header={
        "detuning_rad_s": cfg.laser.detuning,
        "seed": cfg.seed,
        "mode_frequencies_rad_s": modes.frequencies,
        "lamb_dicke": modes.lamb_dicke,
    })
    manifest.add(path)
    summary = magnus_summary(pulse, modes, cfg.laser.detuning)
    return {"cost": summary.cost, "chi": pulse.metadata.get("chi"),
            "pulse_file": str(path)}


def _load_or_optimize_pulse(cfg, modes, manifest):
    if cfg.gate["pulse_file"] is not None:
        return load_pulse(cfg.gate["pulse_file"])
    log.info("no pulse_file given; optimizing one")
    return optimize_pulse(modes, _optimizer_config(cfg))


def _run_simulate(cfg, manifest):
    modes = _derive(cfg)
    pulse = _load_or_optimize_pulse(cfg, modes, manifest)
    tau = pulse.total_duration
    t_grid = np.linspace(0.0, tau, cfg.single_ion["points"] // 8 + 2)
    traj = evolve_two_ion_gate(pulse, modes, cfg.noise, cfg.space, t_grid,
                               cfg.laser.detuning, drift=cfg.laser.drift_offset,
                               step=cfg.gate["step"])
    pops = np.real(np.einsum("tii->ti", traj.qubit_states))
    header = ["time_s", "pop_00", "pop_01", "pop_10", "pop_11"] \
        + [f"occupation_mode{p}" for p in range(traj.mode_occupations.shape[1])] \
        + ["purity"]
    rows = [[t, *pops[i], *traj.mode_occupations[i], traj.purity[i]]
            for i, t in enumerate(traj.times)]
    manifest.add(write_csv(manifest.outdir / "trajectory.csv", header, rows))
    fid = gate_fidelity(pulse, modes, cfg.space, cfg.laser.detuning,
                        drift=cfg.laser.drift_offset, noise=cfg.noise,
                        step=cfg.gate["step"])[0]
    return {"final_bell_fidelity": fid}


def _run_metrics(cfg, manifest):
    modes = _derive(cfg)
    pulse = _load_or_optimize_pulse(cfg, modes, manifest)
    t_grid = np.linspace(0.0, pulse.total_duration, 81)
    traj = evolve_two_ion_gate(pulse, modes, cfg.noise, cfg.space, t_grid,
                               cfg.laser.detuning, step=cfg.gate["step"])
    series = metric_series(traj.times, traj.qubit_states, bell_state())
    rows = zip(series.times, series.entropy, series.fidelity, series.negativity)
    manifest.add(write_csv(manifest.outdir / "metrics.csv",
                           ["time_s", "entropy", "fidelity", "negativity"], rows))
    return {"final_fidelity": float(series.fidelity[-1]),
            "final_negativity": float(series.negativity[-1])}


def _run_scan(cfg, manifest):
    modes = _derive(cfg)
    pulse = _load_or_optimize_pulse(cfg, modes, manifest)
    span = cfg.scan["drift_span"]
    grid = np.linspace(-span, span, cfg.scan["drift_points"])

    def cell(drift):
        return gate_fidelity(pulse, modes, cfg.space, cfg.laser.detuning,
                             drift=drift)[0]

    fids = _parallel_map(cell, list(grid))
    rows = [[g / (2 * np.pi), f] for g, f in zip(grid, fids)]
    manifest.add(write_csv(manifest.outdir / "robustness.csv",
                           ["drift_hz", "fidelity"], rows))
    window = half_max_window(grid, np.asarray(fids))
    return {"half_max_window_hz": window / (2 * np.pi)}


def _run_eb(cfg, manifest):
    if cfg.eb["channels_file"] is None:
        raise ConfigError("[eb] channels_file is required for the eb experiment")
    if cfg.eb["photon_frequency"] is None:
        raise ConfigError("[eb] photon_frequency is required for the eb experiment")
    channels = load_channels(cfg.eb["channels_file"])
    ebcfg = EbConfig(
        nuclear_element=cfg.eb["nuclear_element"],
        spin_excited=cfg.eb["spin_excited"],
        j_initial=cfg.eb["j_initial"],
        photon_frequency=cfg.eb["photon_frequency"],
        channels=channels,
    )
    rate = eb_rate(ebcfg)
    gamma = enhancement_factor(ebcfg, cfg.transition.decay_rate)
    rows = [[rate, gamma]]
    header = ["gamma_eb_1_s", "enhancement"]
    summary = {"gamma_eb_1_s": rate, "enhancement": gamma}
    if gamma > 0:
        est = spam_time(gamma, cfg.transition.decay_rate)
        rows[0].append(est.time)
        header.append("spam_time_s")
        summary["spam_time_s"] = est.time
    if cfg.eb["target_time"] is not None:
        needed = required_enhancement(cfg.eb["target_time"],
                                      cfg.transition.decay_rate)
        summary["required_enhancement"] = needed
    manifest.add(write_csv(manifest.outdir / "eb.csv", header, rows))
    return summary


HANDLERS = {
    "modes": _run_modes,
    "rabi": _run_rabi,
    "ramsey": _run_ramsey,
    "t1t2-scan": _run_t1t2,
    "optimize-pulse": _run_optimize,
    "simulate-gate": _run_simulate,
    "robustness-scan": _run_scan,
    "metrics": _run_metrics,
    "eb": _run_eb,
}


def run_config(cfg: RunConfig, outdir):
    manifest = Manifest(outdir, cfg.raw_text, cfg.seed)
    log.info(f"running experiment {cfg.experiment}")
    summary = HANDLERS[cfg.experiment](cfg, manifest)
    manifest_path = manifest.write(extra=summary)
    return manifest_path


# --------------------------------------------------------------------------
# bundled presets
# --------------------------------------------------------------------------

def preset_power_configs():
    """The two drive configurations used by the entanglement presets.

    30 uW: tau = 100 ms, Rabi capped at 20 kHz, drift samples at the
    default +-100/200 Hz.  10x power: tau = 10 ms, cap 60 kHz, close-in
    drift samples matched to its wider tolerance band.
    """
    base = OptimizerConfig()
    tenfold = OptimizerConfig(
        total_duration=10e-3,
        rabi_bounds=(2 * np.pi * 3e3, 2 * np.pi * 60e3),
        drift_samples=tuple(2 * np.pi * v
                            for v in (-600.0, -400.0, -200.0, -100.0,
                                      100.0, 200.0, 400.0, 600.0)),
    )
    return {"p30uW": base, "p300uW": tenfold}


def _preset_modes():
    trap = TrapConfig(ion_mass=thorium_mass())
    modes = normal_modes(trap)
    return modes.with_lamb_dicke(lamb_dicke_matrix(modes, NuclearTransition()))


def reproduce_fig1(outdir):
    """Single-ion characterization: Rabi, free decay, Ramsey."""
    manifest = Manifest(outdir, "preset:fig1", seed=0)
    laser = LaserConfig(power=30e-6, phase_noise_rate=10.0)
    transition = NuclearTransition()
    omega = rabi_frequency(laser, transition)
    noise = NoiseModel(decay_rate=transition.decay_rate, laser_rate=10.0)

    rabi = rabi_experiment(omega, noise=noise)
    manifest.add(write_csv(Path(outdir) / "rabi.csv", ["time_s", "pop_excited"],
                           zip(rabi.times, rabi.populations)))
    t1 = t1_experiment(NoiseModel(decay_rate=transition.decay_rate, laser_rate=10.0))
    manifest.add(write_csv(Path(outdir) / "t1.csv", ["time_s", "pop_excited"],
                           zip(t1.times, t1.populations)))
    ramsey = ramsey_experiment(2 * np.pi * 100.0, noise)
    manifest.add(write_csv(Path(outdir) / "ramsey.csv", ["delay_s", "pop_excited"],
                           zip(ramsey.times, ramsey.populations)))
    summary = {
        "pi_time_s": rabi.fitted["pi_time"],
        "rabi_frequency_rad_s": omega,
        "t1_s": t1.fitted["t1"],
        "decay_rate_1_s": transition.decay_rate,
        "t2_s": ramsey.fitted["t2"],
    }
    return manifest.write(extra=summary)


def reproduce_fig3(outdir, laser_rates=(100.0, 10.0, 1.0, 0.1), grid_points=61):
    """Entanglement metrics vs laser phase noise at both power levels."""
    manifest = Manifest(outdir, "preset:fig3", seed=OptimizerConfig().seed)
    modes = _preset_modes()
    space = HilbertSpace(2, 2, 6)
    summary = {}
    for name, ocfg in preset_power_configs().items():
        pulse = optimize_pulse(modes, ocfg)
        log.info(f"{name}: optimized pulse cost {pulse.metadata['cost']:.2e}")
        step = 2.5e-6 if ocfg.total_duration > 20e-3 else 1.0e-6
        t_grid = np.linspace(0.0, ocfg.total_duration, grid_points)

        def cell(rate, pulse=pulse, ocfg=ocfg, step=step, t_grid=t_grid):
            noise = NoiseModel(decay_rate=1.25e-4, laser_rate=rate)
            traj = evolve_two_ion_gate(pulse, modes, noise, space, t_grid,
                                       ocfg.detuning, step=step)
            return metric_series(traj.times, traj.qubit_states, bell_state())

        series_list = _parallel_map(cell, list(laser_rates))
        for rate, series in zip(laser_rates, series_list):
            tag = f"{name}_gl{rate:g}Hz"
            rows = zip(series.times, series.entropy, series.fidelity,
                       series.negativity)
            manifest.add(write_csv(Path(outdir) / f"metrics_{tag}.csv",
                                   ["time_s", "entropy", "fidelity", "negativity"],
                                   rows))
            summary[f"final_fidelity_{tag}"] = float(series.fidelity[-1])
            summary[f"final_negativity_{tag}"] = float(series.negativity[-1])
    return manifest.write(extra=summary)


def reproduce_fig4(outdir, detunings_mhz=(2.0, 2.04, 2.07), points=17):
    """Drift-robustness curves for both powers at three detunings."""
    manifest = Manifest(outdir, "preset:fig4", seed=OptimizerConfig().seed)
    modes = _preset_modes()
    space = HilbertSpace(2, 2, 6)
    summary = {}
    for name, base in preset_power_configs().items():
        for det in detunings_mhz:
            ocfg = replace(base, detuning=2 * np.pi * det * 1e6)
            pulse = optimize_pulse(modes, ocfg)
            span = 2 * np.pi * 1.2e3
            grid = np.linspace(-span, span, points)
            g, f = robustness_scan(pulse, modes, space, ocfg.detuning, grid)
            tag = f"{name}_delta{det:g}MHz"
            rows = [[gg / (2 * np.pi), ff] for gg, ff in zip(g, f)]
            manifest.add(write_csv(Path(outdir) / f"robustness_{tag}.csv",
                                   ["drift_hz", "fidelity"], rows))
            summary[f"window_hz_{tag}"] = half_max_window(g, f) / (2 * np.pi)
    return manifest.write(extra=summary)


PRESETS = {"fig1": reproduce_fig1, "fig3": reproduce_fig3, "fig4": reproduce_fig4}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def main(argv=None):
    _setup_logging()
    parser = argparse.ArgumentParser(prog="thorq")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config-driven experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("--config", required=True)

    p_rep = sub.add_parser("reproduce", help="run a bundled preset")
    p_rep.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p_rep.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            parse_config(args.config)
            log.info("config is valid")
            return 0
        if args.command == "run":
            cfg = parse_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            outdir = Path(args.out) if args.out else (cfg.output_dir or Path("out"))
            manifest_path = run_config(cfg, outdir)
            print(manifest_path)
            return 0
        if args.command == "reproduce":
            outdir = Path(args.out) if args.out else Path(f"out-{args.preset}")
            manifest_path = PRESETS[args.preset](outdir)
            print(manifest_path)
            return 0
    except ConfigError as exc:
        log.error(f"config error: {exc}")
        return 2
    except PhysicsError as exc:
        log.error(f"physics error: {exc}")
        return 3
    except OptimizationError as exc:
        log.error(f"optimizer failure: {exc}")
        return 5
    except NumericalError as exc:
        log.error(f"numerical failure: {exc}")
        return 4
    except ThorqError as exc:
        log.error(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
