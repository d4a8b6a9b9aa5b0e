"""Stochastic measurement-and-feedback control of the kicked top.

Three engines over one parameter space: the exact classical map with a
probabilistic contraction toward the unstable fixed point, full spin-S
quantum trajectories with an ancilla-mediated Kraus control channel,
and a truncated-Wigner ensemble carrying the leading quantum noise.
Closed-form references (fixed point, stability, critical control rate,
full-reset entanglement) live alongside the Monte Carlo machinery, and
a sweep harness persists tidy CSV tables reproducibly across worker
counts.
"""

__version__ = "0.1.0"

from .classical import (
    CRITICAL_KICK,
    ControlParams,
    FixedPointData,
    NoFixedPointError,
    contraction_from_angle,
    control_step_radial,
    control_step_spherical,
    critical_probability,
    find_fixed_point,
    kicked_top_step,
    lyapunov_linearized,
    moment_threshold,
)
from .experiments import (
    LyapunovConfig,
    StochasticRunConfig,
    density_dump,
    lyapunov_benettin,
    order_parameter_O2,
    run_controlled_trajectory,
)
from .harness import ExperimentConfig, SweepTable, resume_or_extend, run_experiment
from .observables import (
    bipartite_entropy,
    binder_ratio,
    displacement_R2,
    fidelity,
    fullreset_analytics,
    transverse_fluctuations,
    variance_peak,
)
from .quantum import (
    ControlChannel,
    RotatedFrame,
    build_kicked_top_unitary,
    build_rotated_frame,
    evolve_quantum_trajectory,
    spin_coherent_state,
)
from .twa import sample_initial_wigner, twa_evolve, twa_fidelity, twa_s_perp2
