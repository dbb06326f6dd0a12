"""Bundled benchmark problems and randomized instances for testing.

The named problems have known structure: ``ou`` is the control-free
mean-reverting benchmark with average cost 1 and bias (x^2 - 1)/2;
``drift_control`` trades control effort against variance through the
drift; ``diffusion_control`` has the closed-form optimum of constant
minimal noise; ``drift_shift`` has a smooth interior optimal strategy,
useful for checks that need a jump-free control; the stiff and quartic
variants exercise time-step bias and genuine second-order quadrature
error respectively.
"""

from __future__ import annotations

import numpy as np

from .model import ControlSet, Domain, Problem, Strategy, ToleranceSet

__all__ = ["build", "names", "random_problem", "random_strategy", "PROBLEMS"]


def _ou(n_nodes=4001):
    return Problem.from_sources(
        "-x", "sqrt(2)", "x*x",
        ControlSet(0.0, 0.0, 1),
        Domain(-8.0, 8.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=1e-3),
    )


def _drift_control(n_nodes=2001, n_controls=101):
    return Problem.from_sources(
        "-u*x", "sqrt(2)", "x*x + u",
        ControlSet(1.0, 2.0, n_controls),
        Domain(-8.0, 8.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=1e-3),
    )


def _diffusion_control(n_nodes=2001, n_controls=61):
    return Problem.from_sources(
        "-x", "u", "x*x",
        ControlSet(0.5, 2.0, n_controls),
        Domain(-8.0, 8.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=2e-2),
    )


def _drift_shift(n_nodes=2401, n_controls=401):
    # Domain wide enough that the density of the worst starting strategy
    # (constant u = -2, a unit Gaussian centred at -2) fits in the core.
    return Problem.from_sources(
        "u - x", "sqrt(2)", "x*x + u*u",
        ControlSet(-2.0, 2.0, n_controls),
        Domain(-12.0, 12.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=1e-3),
    )


def _stiff_ou(n_nodes=2001):
    return Problem.from_sources(
        "-10*x", "sqrt(2)", "x*x",
        ControlSet(0.0, 0.0, 1),
        Domain(-4.0, 4.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=1e-3),
    )


def _soft_quartic(n_nodes=2001):
    return Problem.from_sources(
        "-0.2*x^3 - 0.2*x", "sqrt(2)", "x*x",
        ControlSet(0.0, 0.0, 1),
        Domain(-8.0, 8.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=1e-3),
    )


PROBLEMS = {
    "ou": _ou,
    "drift_control": _drift_control,
    "diffusion_control": _diffusion_control,
    "drift_shift": _drift_shift,
    "stiff_ou": _stiff_ou,
    "soft_quartic": _soft_quartic,
}


def names():
    return sorted(PROBLEMS)


def build(name: str, **overrides) -> Problem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown catalog problem {name!r}; have {names()}") from None
    return factory(**overrides)


def random_problem(seed: int, n_nodes: int = 801, n_controls: int = 21) -> Problem:
    """A randomized dissipative instance with bounded coefficient ranges.

    Drift slopes and diffusion levels are kept in ranges where the
    stationary mass concentrates well inside the interval and the
    log-weight stays far from underflow.
    """
    rng = np.random.default_rng(seed)
    kind = rng.integers(0, 3)
    if kind == 0:
        # control scales the restoring drift
        c0 = rng.uniform(0.3, 1.2)
        c1 = rng.uniform(0.1, 1.0)
        s0 = rng.uniform(0.8, 1.6)
        g1 = rng.uniform(0.0, 1.0)
        g2 = rng.uniform(0.0, 1.0)
        drift = f"-({c0:.6f} + {c1:.6f}*u)*x"
        diffusion = f"{s0:.6f}"
        cost = f"x*x + {g1:.6f}*u + {g2:.6f}*u*u"
        controls = ControlSet(rng.uniform(0.2, 0.8), rng.uniform(1.2, 2.0), n_controls)
    elif kind == 1:
        # control scales the noise level
        c0 = rng.uniform(0.5, 1.5)
        s0 = rng.uniform(0.5, 1.0)
        s1 = rng.uniform(0.3, 0.8)
        g2 = rng.uniform(0.0, 1.0)
        drift = f"-{c0:.6f}*x"
        diffusion = f"{s0:.6f} + {s1:.6f}*u"
        cost = f"x*x + {g2:.6f}*u*u"
        controls = ControlSet(0.0, 1.0, n_controls)
    else:
        # control shifts the drift target
        c0 = rng.uniform(0.5, 1.5)
        s0 = rng.uniform(0.9, 1.5)
        g1 = rng.uniform(0.2, 1.0)
        w = rng.uniform(0.5, 1.5)
        drift = f"{g1:.6f}*u - {c0:.6f}*x"
        diffusion = f"{s0:.6f}"
        cost = f"x*x + u*u"
        controls = ControlSet(-w, w, n_controls)
    return Problem.from_sources(
        drift, diffusion, cost,
        controls,
        Domain(-10.0, 10.0, n_nodes, 0.5),
        ToleranceSet(tail_mass_tol=2e-2),
    )


def random_strategy(problem: Problem, seed: int) -> Strategy:
    """Node-wise uniform random controls; deliberately rough."""
    rng = np.random.default_rng(seed)
    span = problem.controls.u_max - problem.controls.u_min
    vals = problem.controls.u_min + span * rng.random(problem.domain.n_nodes)
    return Strategy(problem.domain, problem.controls, vals)
