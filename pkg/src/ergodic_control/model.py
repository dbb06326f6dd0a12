"""Problem definition: coefficients, control set, spatial grid, tolerances.

A problem is the controlled scalar diffusion

    dX_t = b(u, X_t) dt + sigma(u, X_t) dW_t,    running cost f(u, X_t),

posed on a truncated interval with a uniform node grid and a finite
uniform control grid.  ``validate_problem`` samples the standing
assumptions (non-degenerate diffusion, inward drift at the boundary,
moderate cost growth) and reports them; degeneracy and outward drift are
fatal, growth findings are warnings.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .expressions import CoefficientExpr, parse_expression

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ControlSet",
    "Domain",
    "ToleranceSet",
    "Problem",
    "Strategy",
    "CheckEntry",
    "ValidationReport",
    "ProblemValidationError",
    "validate_problem",
    "load_config",
    "coefficient_table",
]

_SIGMA_FLOOR = 1e-8


class ProblemValidationError(ValueError):
    """Raised when a fatal assumption check fails."""


@dataclass(frozen=True)
class ControlSet:
    """Compact control interval, discretized uniformly."""

    u_min: float
    u_max: float
    n_controls: int

    def __post_init__(self):
        if not np.isfinite(self.u_min) or not np.isfinite(self.u_max):
            raise ValueError("control bounds must be finite")
        if self.u_max < self.u_min:
            raise ValueError("u_max must be >= u_min")
        if self.n_controls < 1:
            raise ValueError("n_controls must be >= 1")
        if self.u_max == self.u_min and self.n_controls != 1:
            raise ValueError("degenerate control interval needs n_controls = 1")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_controls)

    def clamp(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.u_min, self.u_max)


@dataclass(frozen=True, eq=False)
class Domain:
    """Uniform grid on a truncated interval with a centered core region.

    Residual norms and strategy claims are evaluated on the core (the
    central ``core_fraction`` of the interval) where truncation effects
    are negligible.
    """

    x_min: float
    x_max: float
    n_nodes: int
    core_fraction: float = 0.5
    x: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False)
    zero_index: int = field(init=False)
    core_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("domain bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.n_nodes < 3:
            raise ValueError("n_nodes must be >= 3")
        if not 0.0 < self.core_fraction <= 1.0:
            raise ValueError("core_fraction must lie in (0, 1]")
        x = np.linspace(self.x_min, self.x_max, self.n_nodes)
        h = (self.x_max - self.x_min) / (self.n_nodes - 1)
        center = 0.5 * (self.x_min + self.x_max)
        half_core = 0.5 * self.core_fraction * (self.x_max - self.x_min)
        mask = np.abs(x - center) <= half_core + 1e-9 * h
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "zero_index", int(np.argmin(np.abs(x))))
        object.__setattr__(self, "core_mask", mask)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.x_max - self.x_min)


@dataclass(frozen=True)
class ToleranceSet:
    """Convergence and sanity thresholds used across the pipeline."""

    rho_tol: float = 1e-8
    residual_tol: float = 1e-3
    tail_mass_tol: float = 1e-3
    max_iterations: int = 60

    def __post_init__(self):
        if self.rho_tol <= 0 or self.residual_tol <= 0 or self.tail_mass_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class Problem:
    """Coefficients plus control set, grid, and tolerances."""

    drift: CoefficientExpr
    diffusion: CoefficientExpr
    cost: CoefficientExpr
    controls: ControlSet
    domain: Domain
    tolerances: ToleranceSet = ToleranceSet()

    @classmethod
    def from_sources(cls, drift, diffusion, cost, controls, domain, tolerances=ToleranceSet()):
        return cls(
            drift=parse_expression(drift),
            diffusion=parse_expression(diffusion),
            cost=parse_expression(cost),
            controls=controls,
            domain=domain,
            tolerances=tolerances,
        )


@dataclass(frozen=True, eq=False)
class Strategy:
    """Stationary Markov control: one value per grid node, clamped to U.

    Between nodes the strategy acts piecewise-constant (nearest node),
    which is how the path simulator looks it up.
    """

    domain: Domain
    controls: ControlSet
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.domain.n_nodes,):
            raise ValueError(
                f"strategy needs {self.domain.n_nodes} values, got shape {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("strategy values must be finite")
        object.__setattr__(self, "values", self.controls.clamp(values))

    @classmethod
    def constant(cls, problem: Problem, u: float) -> "Strategy":
        return cls(problem.domain, problem.controls, np.full(problem.domain.n_nodes, float(u)))

    @classmethod
    def from_expression(cls, problem: Problem, source: str) -> "Strategy":
        expr = parse_expression(source)
        if "u" in expr.variables:
            raise ValueError("a strategy expression may only depend on x")
        vals = coefficient_table(expr, 0.0, problem.domain.x)
        return cls(problem.domain, problem.controls, vals)

    def max_adjacent_jump(self) -> float:
        if self.values.shape[0] < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values))))


def coefficient_table(expr: CoefficientExpr, u, x) -> np.ndarray:
    """Evaluate a coefficient on broadcastable inputs as a full array."""
    shape = np.broadcast_shapes(np.shape(u), np.shape(x))
    out = expr(u, x)
    return np.ascontiguousarray(np.broadcast_to(np.asarray(out, dtype=float), shape))


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    fatal: bool
    detail: str
    witness: Optional[tuple] = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed or not c.fatal for c in self.checks)

    @property
    def fatal_failures(self) -> tuple:
        return tuple(c for c in self.checks if c.fatal and not c.passed)

    @property
    def warnings(self) -> tuple:
        return tuple(c for c in self.checks if not c.fatal and not c.passed)

    def raise_on_fatal(self):
        bad = self.fatal_failures
        if bad:
            lines = "; ".join(f"{c.name}: {c.detail}" for c in bad)
            raise ProblemValidationError(lines)


def validate_problem(problem: Problem) -> ValidationReport:
    """Sample the standing assumptions on the control and node grids.

    Checks, in order: coefficients evaluate to finite values everywhere;
    the diffusion is bounded away from zero (fatal); the drift points
    inward at both ends of the truncated interval, uniformly over the
    control grid (fatal, the recurrence proxy); the cost's growth measured
    by a log-log slope stays polynomial of moderate degree (warning).
    """
    checks = []
    u = problem.controls.values[:, None]
    x = problem.domain.x[None, :]

    tables = {}
    finite_ok, finite_detail, finite_witness = True, "all coefficients finite on the grid", None
    for name, expr in (("drift", problem.drift), ("diffusion", problem.diffusion), ("cost", problem.cost)):
        vals = coefficient_table(expr, u, x)
        tables[name] = vals
        bad = ~np.isfinite(vals)
        if finite_ok and bad.any():
            i, j = np.unravel_index(np.argmax(bad), bad.shape)
            finite_ok = False
            finite_witness = (float(problem.controls.values[i]), float(problem.domain.x[j]))
            finite_detail = (
                f"{name} is non-finite at u={finite_witness[0]:g}, x={finite_witness[1]:g}"
            )
    checks.append(CheckEntry("finite_coefficients", finite_ok, True, finite_detail, finite_witness))

    sig = np.abs(tables["diffusion"])
    sig_search = np.where(np.isfinite(sig), sig, np.inf)
    i, j = np.unravel_index(int(np.argmin(sig_search)), sig.shape)
    smin = float(sig_search[i, j])
    witness = (float(problem.controls.values[i]), float(problem.domain.x[j]))
    nondeg = np.isfinite(sig).all() and smin >= _SIGMA_FLOOR
    if nondeg:
        smax = float(np.max(sig))
        bound = max(smax, 1.0 / smin)
        detail = f"|sigma| in [{smin:.3g}, {smax:.3g}], ellipticity constant {bound:.3g}"
    elif np.isfinite(smin):
        detail = f"|sigma| = {smin:.3g} at u={witness[0]:g}, x={witness[1]:g} (must be >= {_SIGMA_FLOOR:g})"
    else:
        detail = "diffusion is nowhere finite on the grid"
    checks.append(CheckEntry("nondegenerate_diffusion", nondeg, True, detail, None if nondeg else witness))

    drift_tab = tables["drift"]
    rec_ok, rec_detail, rec_witness = True, "x * b(u, x) < 0 at both ends for every control", None
    for idx, label in ((0, problem.domain.x_min), (-1, problem.domain.x_max)):
        vals = label * drift_tab[:, idx]
        k = int(np.argmax(vals))
        if not finite_ok or not np.isfinite(vals[k]) or vals[k] >= 0.0:
            rec_ok = False
            rec_witness = (float(problem.controls.values[k]), float(label))
            rec_detail = (
                f"x * b = {float(vals[k]):.3g} >= 0 at the boundary x={label:g} for u={rec_witness[0]:g}; "
                "the drift must point inward"
            )
            break
    checks.append(CheckEntry("inward_drift_at_boundary", rec_ok, True, rec_detail, rec_witness))

    growth_ok, growth_detail = True, "cost growth looks polynomial of moderate degree"
    if finite_ok:
        from .numerics import fit_polynomial_envelope

        worst = np.max(np.abs(tables["cost"]), axis=0)
        m, c, fitted = fit_polynomial_envelope(problem.domain.x, worst, max_degree=12)
        if not fitted or c > 1e12:
            growth_ok = False
            growth_detail = f"cost grows like degree {m} with envelope constant {c:.3g}"
        else:
            growth_detail = f"cost envelope degree {m}, constant {c:.3g}"
    checks.append(CheckEntry("cost_growth", growth_ok, False, growth_detail, None))

    return ValidationReport(tuple(checks))


_REQUIRED_FIELDS = (
    "drift", "diffusion", "cost",
    "u_min", "u_max", "n_controls",
    "x_min", "x_max", "n_nodes",
)

_OPTIONAL_FIELDS = {
    "core_fraction": 0.5,
    "rho_tol": 1e-8,
    "residual_tol": 1e-3,
    "tail_mass_tol": 1e-3,
    "max_iterations": 60,
    "initial_strategy": None,
}


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    problem: Problem
    initial_strategy: Optional[Strategy]
    raw: dict


def load_config(path) -> ProblemConfig:
    """Read a TOML problem file.

    Required keys: drift, diffusion, cost (formulas in u and x), u_min,
    u_max, n_controls, x_min, x_max, n_nodes.  Optional keys:
    core_fraction, rho_tol, residual_tol, tail_mass_tol, max_iterations,
    initial_strategy (a formula in x).  Unknown keys are rejected.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    unknown = set(raw) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED_FIELDS if k not in raw]
    if missing:
        raise ValueError(f"missing config keys: {missing}")

    merged = dict(_OPTIONAL_FIELDS)
    merged.update(raw)

    controls = ControlSet(float(merged["u_min"]), float(merged["u_max"]), int(merged["n_controls"]))
    domain = Domain(
        float(merged["x_min"]), float(merged["x_max"]),
        int(merged["n_nodes"]), float(merged["core_fraction"]),
    )
    tolerances = ToleranceSet(
        rho_tol=float(merged["rho_tol"]),
        residual_tol=float(merged["residual_tol"]),
        tail_mass_tol=float(merged["tail_mass_tol"]),
        max_iterations=int(merged["max_iterations"]),
    )
    problem = Problem.from_sources(
        merged["drift"], merged["diffusion"], merged["cost"], controls, domain, tolerances
    )
    initial = None
    if merged["initial_strategy"] is not None:
        initial = Strategy.from_expression(problem, merged["initial_strategy"])
    return ProblemConfig(problem=problem, initial_strategy=initial, raw=dict(merged))
