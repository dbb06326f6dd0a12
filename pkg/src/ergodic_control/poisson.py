"""Bias function of a strategy: the centered solution of the Poisson equation

    a(alpha(x), x) v'' + b(alpha(x), x) v' + f(alpha(x), x) - rho = 0,

with a = sigma^2 / 2 and rho the strategy's average cost.  Writing the
generator in divergence form against the stationary density gives the
quadrature solution

    v'(x) = -2 H(x) / (sigma^2(alpha(x), x) p(x)),
    H(x)  = integral_{x_min}^x (f(alpha(y), y) - rho) p(y) dy,

so v' comes from running integrals, never from a linear solve.  v is the
running integral of v' anchored near zero, then shifted to have zero
stationary mean; v'' is recovered from the equation itself rather than by
differencing v'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import InvariantDensity
from .model import Problem, Strategy, coefficient_table
from .numerics import central_difference, cumulative_integral, integrate

__all__ = [
    "ValueFunction",
    "PoissonError",
    "UncenteredCostError",
    "solve_poisson",
    "centering_defect",
    "ode_residual",
]

P_FLOOR = 1e-14


class PoissonError(RuntimeError):
    pass


class UncenteredCostError(PoissonError):
    """The centered running integral fails to return to zero at x_max."""


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Centered bias function with its first two derivatives on the grid.

    ``strategy`` is None when the arrays were reconstructed from exported
    tables; Bellman-residual checks work either way, the per-strategy ODE
    residual does not.
    """

    strategy: Strategy | None
    rho: float
    v: np.ndarray
    dv: np.ndarray
    d2v: np.ndarray
    centering_defect: float
    n_guarded_nodes: int

    @property
    def domain(self):
        if self.strategy is None:
            raise PoissonError("value function carries no strategy")
        return self.strategy.domain


def centering_defect(problem: Problem, dens: InvariantDensity, rho: float) -> float:
    """H(x_max): total integral of (f - rho) against the density.

    Vanishes (up to quadrature round-off) exactly when rho is the grid
    average cost; its size measures how badly the right-hand side of the
    Poisson equation is off-center.
    """
    domain = problem.domain
    f = coefficient_table(problem.cost, dens.strategy.values, domain.x)
    return integrate((f - rho) * dens.density, domain.h)


def solve_poisson(
    problem: Problem,
    dens: InvariantDensity,
    rho: float,
    *,
    anchor_index: int | None = None,
    centering_tol: float | None = None,
    p_floor: float = P_FLOOR,
) -> ValueFunction:
    """Solve the Poisson equation for the bias function of ``dens``'s strategy.

    Where the density underflows below ``p_floor`` the quotient for v' is
    meaningless; those tail nodes get v' by linear extrapolation from the
    nearest trusted interior nodes instead.

    Raises
    ------
    UncenteredCostError
        |H(x_max)| exceeds ``centering_tol`` (default 1e-8 * (1 + |rho|)),
        i.e. ``rho`` is not the average cost of this strategy on this grid.
    """
    domain = problem.domain
    strategy = dens.strategy
    x = domain.x
    alpha = strategy.values
    p = dens.density

    f = coefficient_table(problem.cost, alpha, x)
    sig2 = coefficient_table(problem.diffusion, alpha, x) ** 2
    b = coefficient_table(problem.drift, alpha, x)

    bigh = cumulative_integral((f - rho) * p, domain.h, anchor_index=0)
    defect = float(bigh[-1])
    if centering_tol is None:
        centering_tol = 1e-8 * (1.0 + abs(rho))
    if abs(defect) > centering_tol:
        raise UncenteredCostError(
            f"|H(x_max)| = {abs(defect):.3g} exceeds {centering_tol:.3g}; "
            "rho does not match the stationary average of the cost"
        )

    trusted = np.flatnonzero(p >= p_floor)
    if trusted.size == 0:
        raise PoissonError("density is below the floor everywhere; no trusted nodes")
    lo, hi = int(trusted[0]), int(trusted[-1])

    dv = np.empty_like(p)
    inner = slice(lo, hi + 1)
    dv[inner] = -2.0 * bigh[inner] / (sig2[inner] * p[inner])
    n_guarded = lo + (p.size - 1 - hi)
    if lo > 0:
        if lo + 1 <= hi:
            slope = (dv[lo + 1] - dv[lo]) / domain.h
        else:
            slope = 0.0
        dv[:lo] = dv[lo] + slope * (x[:lo] - x[lo])
    if hi < p.size - 1:
        if hi - 1 >= lo:
            slope = (dv[hi] - dv[hi - 1]) / domain.h
        else:
            slope = 0.0
        dv[hi + 1 :] = dv[hi] + slope * (x[hi + 1 :] - x[hi])

    if anchor_index is None:
        anchor_index = domain.zero_index
    v = cumulative_integral(dv, domain.h, anchor_index=anchor_index)
    v = v - integrate(v * p, domain.h)

    a = 0.5 * sig2
    d2v = -(f - rho + b * dv) / a

    return ValueFunction(
        strategy=strategy,
        rho=float(rho),
        v=v,
        dv=dv,
        d2v=d2v,
        centering_defect=defect,
        n_guarded_nodes=int(n_guarded),
    )


def ode_residual(problem: Problem, vf: ValueFunction) -> np.ndarray:
    """Pointwise Poisson residual with v'' re-derived by differencing v'.

    The solver recovers v'' from the equation, so feeding that back in
    would be circular; this check differences the quadrature v' instead
    and reports a v'' + b v' + f - rho on the grid.
    """
    domain = vf.domain
    alpha = vf.strategy.values
    x = domain.x
    a = 0.5 * coefficient_table(problem.diffusion, alpha, x) ** 2
    b = coefficient_table(problem.drift, alpha, x)
    f = coefficient_table(problem.cost, alpha, x)
    d2v_fd = central_difference(vf.dv, domain.h, order=1)
    return a * d2v_fd + b * vf.dv + f - vf.rho
