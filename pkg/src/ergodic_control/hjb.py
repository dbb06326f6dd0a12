"""Ergodic Hamilton-Jacobi-Bellman residuals for a candidate (v, rho).

Full form, per node:    min_u [ a(u,x) v'' + b(u,x) v' + f(u,x) ] - rho
Reduced form, per node: v'' + min_u [ (b/a) v' + (f - rho)/a ],  a = sigma^2/2.

The two vanish together: the reduced form is the full-form objective
scaled by the positive 1/a inside the minimum.  Residual norms are taken
over the core region; the minima run over the finite control grid with
smallest-control tie-breaking, matching the improvement step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Problem, Strategy, coefficient_table
from .numerics import fit_polynomial_envelope
from .poisson import ValueFunction

__all__ = ["BellmanResidual", "VerificationReport", "bellman_residual", "verify_solution"]


@dataclass(frozen=True, eq=False)
class BellmanResidual:
    """Node-wise residuals of both HJB forms plus the minimizing controls."""

    full_form: np.ndarray
    reduced_form: np.ndarray
    argmin_strategy: Strategy
    sup_core: float
    sup_all: float


@dataclass(frozen=True, eq=False)
class VerificationReport:
    residual: BellmanResidual
    sup_core_full: float
    sup_core_reduced: float
    form_agreement_defect: float
    form_agreement_tol: float
    envelope_v: tuple
    envelope_dv: tuple
    d2v_lipschitz: float
    verified: bool

    def summary(self) -> dict:
        return {
            "verified": self.verified,
            "sup_core_full": self.sup_core_full,
            "sup_core_reduced": self.sup_core_reduced,
            "form_agreement_defect": self.form_agreement_defect,
            "form_agreement_tol": self.form_agreement_tol,
            "envelope_v_degree": self.envelope_v[0],
            "envelope_v_constant": self.envelope_v[1],
            "envelope_v_fitted": self.envelope_v[2],
            "envelope_dv_degree": self.envelope_dv[0],
            "envelope_dv_constant": self.envelope_dv[1],
            "envelope_dv_fitted": self.envelope_dv[2],
            "d2v_lipschitz": self.d2v_lipschitz,
        }


def _scan_tables(problem: Problem, vf: ValueFunction, rho: float):
    u = problem.controls.values[:, None]
    x = problem.domain.x[None, :]
    b = coefficient_table(problem.drift, u, x)
    a = 0.5 * coefficient_table(problem.diffusion, u, x) ** 2
    f = coefficient_table(problem.cost, u, x)
    q = a * vf.d2v[None, :] + b * vf.dv[None, :] + f
    reduced_obj = (b * vf.dv[None, :] + f - rho) / a
    return a, q, reduced_obj


def bellman_residual(problem: Problem, vf: ValueFunction, rho: float) -> BellmanResidual:
    """Evaluate both HJB forms for (v, rho) on the grid.

    ``argmin_strategy`` records the full-form minimizer at each node
    (ties resolved to the smallest control), which is exactly the
    improvement step of the policy iteration.
    """
    a, q, reduced_obj = _scan_tables(problem, vf, rho)
    kmin = np.argmin(q, axis=0)  # first minimum = smallest control on an ascending grid
    cols = np.arange(q.shape[1])
    full = q[kmin, cols] - rho
    reduced = vf.d2v + np.min(reduced_obj, axis=0)
    core = problem.domain.core_mask
    return BellmanResidual(
        full_form=full,
        reduced_form=reduced,
        argmin_strategy=Strategy(
            problem.domain, problem.controls, problem.controls.values[kmin]
        ),
        sup_core=float(np.max(np.abs(full[core]))),
        sup_all=float(np.max(np.abs(full))),
    )


def _d2v_lipschitz(x: np.ndarray, d2v: np.ndarray, degree: int) -> float:
    num = np.abs(np.diff(d2v))
    den = (1.0 + np.abs(x[:-1]) ** degree + np.abs(x[1:]) ** degree) * np.diff(x)
    return float(np.max(num / den))


def verify_solution(problem: Problem, vf: ValueFunction, rho: float) -> VerificationReport:
    """Check whether (v, rho) satisfies the ergodic HJB equation numerically.

    Verified means: the full-form residual stays within ``residual_tol``
    on the core, the reduced form within the same tolerance rescaled by
    the smallest 1/a, the two forms agree after scaling by a at the
    minimizer, and v, v' admit polynomial envelopes of degree at most 8.
    The local Lipschitz constant of v'' (weighted by the envelope degree)
    is reported but not gated, since it is only meaningful for smooth
    coefficients.
    """
    res = bellman_residual(problem, vf, rho)
    domain = problem.domain
    core = domain.core_mask
    tol = problem.tolerances.residual_tol

    a_star = 0.5 * coefficient_table(
        problem.diffusion, res.argmin_strategy.values, domain.x
    ) ** 2
    agreement = np.abs(res.full_form - a_star * res.reduced_form)
    sup_agreement = float(np.max(agreement[core]))
    a_tab = 0.5 * coefficient_table(
        problem.diffusion, problem.controls.values[:, None], domain.x[None, :]
    ) ** 2
    a_max = float(np.max(a_tab[:, core]))
    a_min = float(np.min(a_tab[:, core]))
    agreement_tol = tol * max(1.0, a_max)

    sup_core_full = float(np.max(np.abs(res.full_form[core])))
    sup_core_reduced = float(np.max(np.abs(res.reduced_form[core])))

    env_v = fit_polynomial_envelope(domain.x[core], vf.v[core])
    env_dv = fit_polynomial_envelope(domain.x[core], vf.dv[core])
    lip = _d2v_lipschitz(domain.x[core], vf.d2v[core], env_dv[0])

    verified = (
        sup_core_full <= tol
        and sup_core_reduced <= tol / a_min
        and sup_agreement <= agreement_tol
        and env_v[2]
        and env_dv[2]
        and np.isfinite(lip)
    )
    return VerificationReport(
        residual=res,
        sup_core_full=sup_core_full,
        sup_core_reduced=sup_core_reduced,
        form_agreement_defect=sup_agreement,
        form_agreement_tol=agreement_tol,
        envelope_v=env_v,
        envelope_dv=env_dv,
        d2v_lipschitz=lip,
        verified=bool(verified),
    )
