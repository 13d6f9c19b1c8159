"""Steady-state mechanical squeezing of a two-ensemble hybrid atom-optomechanical system."""

__version__ = "0.1.0"

from .analysis import (
    SqueezingResult,
    SweepResult,
    fig2_params,
    fig3_params,
    optimize_ratio,
    squeezing_db,
    sweep_kappa,
    sweep_ratio,
)
from .dynamics import DriftSpec, Variant, drift_matrix, modulation_values, noise_matrix
from .errors import ConfigError, ConvergenceError, InstabilityError, ValidationError
from .model import SystemParams, bogoliubov, effective_couplings, mean_field, validate_params
from .solver import (
    CovarianceMatrix,
    Method,
    SolverOptions,
    SteadyState,
    floquet_stability,
    harmonic_balance_steady,
    integrate_covariance,
    lyapunov_steady,
    solve_steady,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "CovarianceMatrix",
    "DriftSpec",
    "InstabilityError",
    "Method",
    "SolverOptions",
    "SqueezingResult",
    "SteadyState",
    "SweepResult",
    "SystemParams",
    "ValidationError",
    "Variant",
    "bogoliubov",
    "drift_matrix",
    "effective_couplings",
    "fig2_params",
    "fig3_params",
    "floquet_stability",
    "harmonic_balance_steady",
    "integrate_covariance",
    "lyapunov_steady",
    "mean_field",
    "modulation_values",
    "noise_matrix",
    "optimize_ratio",
    "solve_steady",
    "squeezing_db",
    "sweep_kappa",
    "sweep_ratio",
    "validate_params",
]
