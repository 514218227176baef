"""Mild solutions of incompressible Navier-Stokes on a periodic box.

Spectral building blocks, the Stokes semigroup, a Picard solver for the
Duhamel formulation, weighted space-time norms and an experiment harness.
"""

from .kernels import use_backend
from .spectral import Domain, SpectralVectorField, lebesgue_norm, sobolev_norm
from .stokes import leray_project, oseen_kernel_slice, stokes_semigroup
from .trajectory import TimeGrid, Trajectory
from .mild import (
    BlowupError,
    ContractionError,
    PicardReport,
    ResolutionError,
    SolverConfig,
    solve_mild,
    time_derivative,
    time_march,
)
from .norms import MixedNormSpec, weighted_mixed_norm
from .data import make_initial_data
from .experiment import ConfigError, ExperimentConfig, run_experiment
from .acceptance import acceptance_suite

__version__ = "0.1.0"

__all__ = [
    "use_backend",
    "Domain",
    "SpectralVectorField",
    "lebesgue_norm",
    "sobolev_norm",
    "leray_project",
    "oseen_kernel_slice",
    "stokes_semigroup",
    "TimeGrid",
    "Trajectory",
    "BlowupError",
    "ContractionError",
    "PicardReport",
    "ResolutionError",
    "SolverConfig",
    "solve_mild",
    "time_derivative",
    "time_march",
    "MixedNormSpec",
    "weighted_mixed_norm",
    "make_initial_data",
    "ConfigError",
    "ExperimentConfig",
    "run_experiment",
    "acceptance_suite",
]
