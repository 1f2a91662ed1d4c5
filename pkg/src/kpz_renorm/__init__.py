"""Lattice Monte Carlo verification of renormalized Cole-Hopf growth dynamics.

The package realizes, on a periodic space-time lattice, the regularization
pipeline for the stochastic growth equation driven by space-time white
noise: mollified noise with its covariance kernel and quadrature constant,
the multiplicative-noise heat equation, the logarithm map to height paths,
the drift-corrected and uncorrected height equations, zero-mean test
function pairings, sequence fields modulo x-independent paths, association
trends, weak-form residuals, and delta-net sections at t = 0.
"""

from .bumps import bump, bump_derivative
from .dynamics import (
    ResidualReport,
    SolverConfig,
    cole_hopf,
    initial_profile,
    ito_residual,
    solve_kpz,
    solve_she,
)
from .errors import (
    ConfigurationError,
    CouplingMismatchError,
    GridMismatchError,
    PositivityError,
    ResolutionError,
    ShapeMismatchError,
    SolverOverflowError,
    SupportViolationError,
    XDependenceError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    Thresholds,
    config_hash,
    default_config,
    resolve_config,
    run_and_report,
    run_experiment,
    write_report,
)
from .grid import (
    FieldPath,
    GridSpec,
    SpaceField,
    SpaceTimeTestFunction,
    SpatialTestFunction,
    backward_diff,
    central_diff,
    forward_diff,
    laplacian,
    make_grid,
    make_spatial_test_function,
    make_test_function,
    pair,
    pair_space,
    spatial_stencils,
)
from .io import load_field_path, load_white_noise, save_field_path, save_white_noise
from .noise import (
    MollifiedNoisePath,
    MollifierOp,
    WhiteNoiseLattice,
    coarsen_in_space,
    coarsen_in_time,
    empirical_quadratic_variation,
    ito_constant,
    make_mollifier,
    mollified_column,
    mollify_noise,
    mollify_noise_multi,
    noise_pairing,
    sample_white_noise,
)
from .renorm import (
    AssociationReport,
    SequenceField,
    StrictDeltaNet,
    associated,
    derivative_class_check,
    make_delta_net,
    nonlinearity_limit,
    quotient_check,
    section_at_zero,
    weak_residual,
)

__version__ = "0.1.0"
