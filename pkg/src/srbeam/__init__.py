"""Collective emission from a pre-excited atomic beam crossing a cavity.

Stochastic trajectory engine for the semiclassical spin equations plus
mean-field, linear-stability, and spectral/statistical analysis tools.
"""

from .params import (
    AtomState,
    DipoleRecord,
    InternalUnits,
    ParameterError,
    SimParams,
    nondimensionalize,
    params_from_config,
    rng_stream,
)
from .dynamics import (
    EnsembleError,
    EnsembleState,
    IntegratorBlowupError,
    collective_dipole,
    inject_atom,
    mode_function,
    run_ensemble,
    run_trajectory,
    step,
)
from .meanfield import (
    MeanFieldConvergenceError,
    MeanFieldSolution,
    frequency_branch_diagram,
    solve_bistable,
    solve_j_parallel_ssr,
    tipping_angle_ssr,
)
from .stability import (
    PhaseBoundaryPoint,
    compute_C0,
    compute_C1,
    dispersion_D,
    dispersion_Dperp,
    leading_root,
    linewidth_phase_diffusion,
    sr_boundary,
    trace_boundary,
)
from .analysis import (
    FitResult,
    ScalingResult,
    SpectrumResult,
    fit_damped_cosine,
    g1_normalized,
    jump_probability,
    mean_square_phase,
    phase_trace,
    scaling_fit,
    spectrum,
    superdiffusion_exponent,
    two_time_correlation,
)

__version__ = "0.1.0"
