"""Optimal prediction of the ultimate maximum of a drifted Brownian motion.

Given B^mu_t = B_t + mu t on [0, T] and its running maximum S^mu, the
package solves the optimal prediction problem

    minimize E (B^mu_tau - S^mu_T)^2   over stopping times 0 <= tau <= T,

whose optimal rule stops the first time the gap X_t = S^mu_t - B^mu_t
enters a time-dependent band [b1(t), b2(t)] (one-sided for mu <= 0).  The
modules provide the closed-form laws of (B^mu, S^mu), the free-boundary
solver for b1/b2, the value surface V(t, x), an independent
dynamic-programming oracle, and a Monte Carlo lab for rule evaluation.
"""
from .problem import ProblemSpec
from .errors import (
    MaxstopError,
    ConfigError,
    MismatchError,
    BracketingError,
    ToleranceError,
)
from .distributions import std_normal_cdf, std_normal_pdf, max_cdf, joint_density
from .gain import gain, gain_t, gain_x, h_function, h_time_derivative
from .curves import GammaCurves, gamma_curves, gamma1_level, gamma2_level
from .quadrature import backend_name
from .kernels import KernelQuery, kernel_J, kernel_K, kernel_L, sample_X
from .solver import (
    BoundaryTable,
    ConvergenceReport,
    SolverConfig,
    refine_convergence,
    residual_I,
    solve_boundaries,
    solve_defects,
)
from .value import ValueResult, DiagnosticsReport, diagnostics, value_at
from .dp import DpResult, BandComparison, compare_bands, solve_dp
from .mc import (
    PathBatch,
    RegretTable,
    RuleEstimate,
    StoppingRule,
    evaluate_rule,
    regret_scan,
    simulate,
    verify_lemma21,
)

__version__ = "0.1.0"

__all__ = [
    "ProblemSpec",
    "MaxstopError",
    "ConfigError",
    "MismatchError",
    "BracketingError",
    "ToleranceError",
    "std_normal_cdf",
    "std_normal_pdf",
    "max_cdf",
    "joint_density",
    "gain",
    "gain_t",
    "gain_x",
    "h_function",
    "h_time_derivative",
    "GammaCurves",
    "gamma_curves",
    "gamma1_level",
    "gamma2_level",
    "backend_name",
    "KernelQuery",
    "kernel_J",
    "kernel_K",
    "kernel_L",
    "sample_X",
    "BoundaryTable",
    "ConvergenceReport",
    "SolverConfig",
    "refine_convergence",
    "residual_I",
    "solve_boundaries",
    "solve_defects",
    "ValueResult",
    "DiagnosticsReport",
    "diagnostics",
    "value_at",
    "DpResult",
    "BandComparison",
    "compare_bands",
    "solve_dp",
    "PathBatch",
    "RegretTable",
    "RuleEstimate",
    "StoppingRule",
    "evaluate_rule",
    "regret_scan",
    "simulate",
    "verify_lemma21",
    "__version__",
]
