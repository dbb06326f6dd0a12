"""Policy iteration for the long-run average cost.

Each round evaluates the current strategy (stationary density, average
cost, bias function), then improves it node by node:

    alpha_next(x) = argmin_u [ a(u,x) v''(x) + b(u,x) v'(x) + f(u,x) ],

ties resolved to the smallest control.  The average cost is non-increasing
along the iteration; violations beyond round-off are reported as warnings
(a sign the grid is too coarse), never raised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hjb
from .density import InvariantDensity, compute_density, average_cost
from .density import stationary_expectation
from .model import Problem, Strategy, validate_problem
from .poisson import ValueFunction, solve_poisson

__all__ = ["IterationReport", "SolveResult", "improve", "evaluate", "solve"]

MONOTONICITY_SLACK = 1e-10


@dataclass(frozen=True)
class IterationReport:
    """One evaluation round of the policy iteration.

    ``rho_decrease`` is the drop from the previous round (None at round
    zero); ``centering_gap`` is the stationary mean of the previous bias
    function under the current density, the constant that reconciles
    consecutive bias functions.
    """

    n: int
    rho: float
    rho_decrease: Optional[float]
    bellman_residual_sup: float
    strategy_change_fraction: float
    centering_gap: Optional[float]
    wall_time_s: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    problem: Problem
    strategy: Strategy
    density: InvariantDensity
    value: ValueFunction
    rho: float
    iterations: tuple
    converged: bool
    reason: str
    warnings: tuple


def improve(problem: Problem, vf: ValueFunction) -> Strategy:
    """One improvement step: node-wise argmin of the Bellman objective."""
    return hjb.bellman_residual(problem, vf, vf.rho).argmin_strategy


def evaluate(problem: Problem, strategy: Strategy):
    """Evaluate a fixed strategy.

    Returns
    -------
    (InvariantDensity, float, ValueFunction)
        The stationary density, its average cost, and the centered bias
        function solving the Poisson equation.
    """
    dens = compute_density(problem, strategy)
    rho = average_cost(problem, dens)
    vf = solve_poisson(problem, dens, rho)
    return dens, rho, vf


def solve(problem: Problem, initial_strategy: Optional[Strategy] = None) -> SolveResult:
    """Run the policy iteration to convergence or the iteration budget.

    Stops converged when the improvement step leaves the strategy fixed
    and the Bellman residual is within ``residual_tol`` on the core, or
    when the cost decrease falls below ``rho_tol`` with the residual
    in tolerance.  Hitting ``max_iterations`` returns converged=False.
    """
    validate_problem(problem).raise_on_fatal()
    tols = problem.tolerances
    strategy = initial_strategy or Strategy.constant(problem, problem.controls.u_min)

    reports = []
    warnings = []
    prev_rho: Optional[float] = None
    prev_v: Optional[np.ndarray] = None
    converged = False
    reason = "max_iterations"

    for n in range(problem.tolerances.max_iterations + 1):
        t0 = time.perf_counter()
        dens, rho, vf = evaluate(problem, strategy)
        residual = hjb.bellman_residual(problem, vf, rho)
        candidate = residual.argmin_strategy
        changed = candidate.values != strategy.values
        change_fraction = float(np.mean(changed))

        rho_decrease = None if prev_rho is None else prev_rho - rho
        if rho_decrease is not None and rho_decrease < -MONOTONICITY_SLACK:
            warnings.append(
                f"iteration {n}: average cost rose by {-rho_decrease:.3g}; "
                "the grid is probably too coarse for this problem"
            )
        centering_gap = (
            None if prev_v is None else stationary_expectation(dens, prev_v - vf.v)
        )
        reports.append(
            IterationReport(
                n=n,
                rho=rho,
                rho_decrease=rho_decrease,
                bellman_residual_sup=residual.sup_core,
                strategy_change_fraction=change_fraction,
                centering_gap=centering_gap,
                wall_time_s=time.perf_counter() - t0,
            )
        )

        residual_ok = residual.sup_core <= tols.residual_tol
        if residual_ok and change_fraction == 0.0:
            converged, reason = True, "fixed_point"
        elif residual_ok and rho_decrease is not None and rho_decrease < tols.rho_tol:
            converged, reason = True, "tolerance"
        if converged or n == problem.tolerances.max_iterations:
            break
        prev_rho, prev_v = rho, vf.v
        strategy = candidate

    return SolveResult(
        problem=problem,
        strategy=strategy,
        density=dens,
        value=vf,
        rho=rho,
        iterations=tuple(reports),
        converged=converged,
        reason=reason,
        warnings=tuple(warnings),
    )
