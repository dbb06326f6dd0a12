"""Stationary density of the controlled diffusion under a fixed strategy.

For a strategy alpha the invariant density on the truncated interval is

    p(x) = C * sigma(alpha(x), x)^-2 * exp(Lambda(x)),
    Lambda(x) = integral_0^x 2 b(alpha(y), y) / sigma(alpha(y), y)^2 dy,

with C normalizing to unit mass.  Lambda is anchored at the node nearest
zero and max-shifted before exponentiation so the weight never overflows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Problem, Strategy, coefficient_table
from .numerics import central_difference, cumulative_integral, integrate

__all__ = [
    "InvariantDensity",
    "DensityError",
    "DomainTooSmallError",
    "compute_density",
    "stationary_expectation",
    "average_cost",
    "adjoint_residual",
]


class DensityError(RuntimeError):
    pass


class DomainTooSmallError(DensityError):
    """Too much stationary mass sits outside the core region."""


@dataclass(frozen=True, eq=False)
class InvariantDensity:
    """Normalized stationary density on the grid.

    ``normalization`` is the constant C of the unnormalized weight
    sigma^-2 exp(Lambda); ``log_weight`` stores Lambda itself.
    """

    strategy: Strategy
    density: np.ndarray
    log_weight: np.ndarray
    normalization: float
    tail_mass: float

    @property
    def domain(self):
        return self.strategy.domain


def compute_density(problem: Problem, strategy: Strategy) -> InvariantDensity:
    """Invariant density for a fixed strategy.

    Raises
    ------
    DensityError
        Non-finite log-weight (coefficients blow up along the strategy).
    DomainTooSmallError
        Stationary mass outside the core exceeds ``tail_mass_tol``.
    """
    domain = problem.domain
    x = domain.x
    alpha = strategy.values
    b = coefficient_table(problem.drift, alpha, x)
    sig2 = coefficient_table(problem.diffusion, alpha, x) ** 2
    if not np.isfinite(b).all() or not np.isfinite(sig2).all() or np.min(sig2) <= 0.0:
        raise DensityError("drift/diffusion not finite and elliptic along the strategy")

    lam = cumulative_integral(2.0 * b / sig2, domain.h, anchor_index=domain.zero_index)
    if not np.isfinite(lam).all():
        raise DensityError("log-weight is not finite; check coefficient growth")

    weight = np.exp(lam - np.max(lam)) / sig2
    mass = integrate(weight, domain.h)
    if not np.isfinite(mass) or mass <= 0.0:
        raise DensityError("weight has no finite positive mass")
    p = weight / mass
    normalization = float(np.exp(-np.max(lam)) / mass)

    core = domain.core_mask
    tail_mass = 1.0 - integrate(p[core], domain.h)
    tail_mass = float(max(tail_mass, 0.0))
    if tail_mass > problem.tolerances.tail_mass_tol:
        raise DomainTooSmallError(
            f"stationary mass {tail_mass:.3g} outside the core exceeds "
            f"tail_mass_tol={problem.tolerances.tail_mass_tol:g}; enlarge the interval"
        )
    return InvariantDensity(
        strategy=strategy,
        density=p,
        log_weight=lam,
        normalization=normalization,
        tail_mass=tail_mass,
    )


def stationary_expectation(dens: InvariantDensity, values: np.ndarray) -> float:
    """Integral of node values against the stationary density."""
    return integrate(np.asarray(values, dtype=float) * dens.density, dens.domain.h)


def average_cost(problem: Problem, dens: InvariantDensity) -> float:
    """Long-run average cost of the density's strategy."""
    f = coefficient_table(problem.cost, dens.strategy.values, problem.domain.x)
    return stationary_expectation(dens, f)


def adjoint_residual(
    problem: Problem, dens: InvariantDensity, jump_tol: Optional[float] = None
) -> Optional[float]:
    """Sup over the core of |(a p)'' - (b p)'| for a smooth strategy.

    The stationary density annihilates the adjoint generator; this checks
    it by direct differencing, a route independent of the quadrature
    construction.  Returns None (check skipped) when the strategy jumps
    between adjacent nodes by more than ``jump_tol``, since differencing
    across a control discontinuity says nothing about the density.
    """
    strategy = dens.strategy
    if jump_tol is None:
        span = problem.controls.u_max - problem.controls.u_min
        jump_tol = max(1e-12, 0.05 * span)
    if strategy.max_adjacent_jump() > jump_tol:
        return None
    domain = problem.domain
    x = domain.x
    alpha = strategy.values
    a = 0.5 * coefficient_table(problem.diffusion, alpha, x) ** 2
    b = coefficient_table(problem.drift, alpha, x)
    flux2 = central_difference(a * dens.density, domain.h, order=2)
    flux1 = central_difference(b * dens.density, domain.h, order=1)
    return float(np.max(np.abs(flux2 - flux1)[domain.core_mask]))
