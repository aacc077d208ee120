"""Numerical laboratory for the generalized SQG equation."""
from .spectral import (
    GridSpec,
    SobolevSpec,
    SpectralField,
    apply_Dsj,
    apply_fractional_laplacian,
    dealias,
    sobolev_norm,
    velocity,
)
from .radial import (
    BumpShape,
    QuadratureSpec,
    RadialProfile,
    angular_velocity,
    construct_f1,
    construct_f2,
    construct_g,
    differential_rotation,
)
from .pseudo import (
    PseudoParams,
    UnderResolvedError,
    evaluate_pseudosolution,
    make_pseudo_params,
    source_term,
)
from .solver import Diagnostics, SolverConfig, integrate, step
from .experiments import ExperimentResult, SweepConfig, run_experiment

__version__ = "0.1.0"
