"""Average-cost optimal control of one-dimensional diffusions.

Solves min over Markov strategies of the long-run average running cost
for dX = b(u, X) dt + sigma(u, X) dW on a truncated interval: explicit
stationary densities, bias functions by quadrature, policy iteration,
residual verification of the ergodic dynamic programming equation, and a
path-simulation cross-check.
"""

from .expressions import CoefficientExpr, parse_expression
from .model import (
    ControlSet,
    Domain,
    Problem,
    Strategy,
    ToleranceSet,
    ValidationReport,
    load_config,
    validate_problem,
)
from .density import InvariantDensity, compute_density, stationary_expectation, average_cost, adjoint_residual
from .poisson import ValueFunction, solve_poisson, ode_residual
from .howard import IterationReport, SolveResult, improve, evaluate, solve
from .hjb import BellmanResidual, VerificationReport, bellman_residual, verify_solution
from .mcsim import SimConfig, MCEstimate, CrossCheckReport, simulate_average_cost, cross_validate
from . import catalog

__version__ = "0.1.0"

__all__ = [
    "CoefficientExpr",
    "parse_expression",
    "ControlSet",
    "Domain",
    "Problem",
    "Strategy",
    "ToleranceSet",
    "ValidationReport",
    "load_config",
    "validate_problem",
    "InvariantDensity",
    "compute_density",
    "stationary_expectation",
    "average_cost",
    "adjoint_residual",
    "ValueFunction",
    "solve_poisson",
    "ode_residual",
    "IterationReport",
    "SolveResult",
    "improve",
    "evaluate",
    "solve",
    "BellmanResidual",
    "VerificationReport",
    "bellman_residual",
    "verify_solution",
    "SimConfig",
    "MCEstimate",
    "CrossCheckReport",
    "simulate_average_cost",
    "cross_validate",
    "catalog",
    "__version__",
]
