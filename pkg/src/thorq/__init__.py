"""Trapped thorium-ion nuclear-qubit simulation and pulse-optimization toolkit."""

from .physics import (LaserConfig, TrapConfig, NuclearTransition, TrapModes,
                      laser_intensity, rabi_frequency, ion_spacing,
                      normal_modes, lamb_dicke_matrix, thorium_mass)
from .single_ion import (NoiseModel, ExperimentResult, DephasingConvention,
                         evolve_single_ion, analytic_damped_rabi,
                         rabi_experiment, t1_experiment, ramsey_experiment)
from .two_ion import HilbertSpace, GateTrajectory, evolve_two_ion_gate
from .pulses import PulseSegment, PulseSequence, uniform_pulse, save_pulse, load_pulse
from .magnus import (MagnusSummary, magnus_beta, magnus_theta, pulse_cost,
                     magnus_summary, displacement_integrals, entangling_phase)
from .optimize import (OptimizerConfig, optimize_pulse, robustness_scan,
                       gate_fidelity, half_max_window)
from .metrics import (MetricSeries, partial_trace_phonons, entanglement_entropy,
                      uhlmann_fidelity, negativity, trace_distance, metric_series)
from .ebridge import (EbChannel, EbConfig, SpamEstimate, eb_rate,
                      enhancement_factor, spam_time, required_enhancement,
                      load_channels)
from .errors import (ThorqError, ConfigError, PhysicsError, NumericalError,
                     TruncationError, FitError, OptimizationError)

__version__ = "0.1.0"
