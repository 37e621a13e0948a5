"""Risk-constrained linear quadratic regulation."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DimensionError, InvalidInput, NumericalError,  # noqa: E402
                     RiskLQRError)
from .model import (CostSpec, Degenerate, Empirical, FiniteDiscrete, Gaussian,  # noqa: E402
                    GaussianMixture, LinearMap, SystemModel, ValidationReport,
                    spectral_radius, validate)
from .moments import NoiseStats, empirical_stats, noise_stats, sample  # noqa: E402
from .riccati import (AffinePolicy, SteadyStatePolicy, backward_pass, dual_value,  # noqa: E402
                      inflated_penalty, steady_state)
from .risk_dual import (KktReport, RiskEvaluation, Solution, Status, epsilon_bar,  # noqa: E402
                        kkt_certificate, lagrangian_eval, lqr_cost, moment_propagation,
                        risk_value, solve_at_multiplier, solve_risk_constrained)
from .sim import EstimateReport, Trajectory, empirical_cdf, estimate, rollout  # noqa: E402

__all__ = [
    "RiskLQRError", "DimensionError", "InvalidInput", "NumericalError", "ConvergenceError",
    "SystemModel", "CostSpec", "Degenerate", "Gaussian", "GaussianMixture", "FiniteDiscrete",
    "Empirical", "LinearMap", "ValidationReport", "validate", "spectral_radius",
    "NoiseStats", "noise_stats", "empirical_stats", "sample",
    "AffinePolicy", "SteadyStatePolicy", "inflated_penalty", "backward_pass", "steady_state",
    "dual_value",
    "Status", "RiskEvaluation", "KktReport", "Solution", "epsilon_bar", "moment_propagation",
    "risk_value", "lqr_cost", "lagrangian_eval", "kkt_certificate", "solve_risk_constrained",
    "solve_at_multiplier",
    "Trajectory", "EstimateReport", "rollout", "estimate", "empirical_cdf",
]
