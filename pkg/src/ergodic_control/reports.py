"""Fixed-format tables and JSON reports for solver runs.

Floats are written with 17 significant digits so a written double parses
back to the identical bits, which is what makes export/evaluate round
trips and byte-level reproducibility checks meaningful.  JSON payloads
sort their keys so repeated runs diff cleanly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import Problem, Strategy
from .poisson import ValueFunction

__all__ = [
    "ReportFormatError",
    "StrategyRangeError",
    "format_float",
    "write_csv",
    "read_csv",
    "write_json",
    "write_strategy_csv",
    "read_strategy_csv",
    "write_value_csv",
    "read_value_csv",
    "write_density_csv",
    "write_iterations_csv",
]

FLOAT_FMT = "%.17g"


class ReportFormatError(ValueError):
    """A table file does not have the expected shape or header."""


class StrategyRangeError(ValueError):
    """A loaded strategy has values outside the problem's control set."""


def format_float(value: float) -> str:
    return FLOAT_FMT % float(value)


def write_csv(path, header, columns) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(cols) != len(header):
        raise ValueError(f"{len(header)} header fields but {len(cols)} columns")
    n = cols[0].shape[0]
    if any(c.shape != (n,) for c in cols):
        raise ValueError("columns must be 1-d and equally long")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(FLOAT_FMT % c[i] for c in cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_csv(path, expected_header=None) -> dict[str, np.ndarray]:
    """Parse a numeric CSV produced by :func:`write_csv` (or shaped like one)."""
    path = Path(path)
    lines = path.read_text(encoding="ascii").strip().splitlines()
    if not lines:
        raise ReportFormatError(f"{path}: empty table")
    header = [name.strip() for name in lines[0].split(",")]
    if expected_header is not None and header != list(expected_header):
        raise ReportFormatError(
            f"{path}: header {header} does not match expected {list(expected_header)}"
        )
    data = np.empty((len(lines) - 1, len(header)))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ReportFormatError(f"{path}:{i}: expected {len(header)} fields, got {len(parts)}")
        try:
            data[i - 2] = [float(part) for part in parts]
        except ValueError as exc:
            raise ReportFormatError(f"{path}:{i}: {exc}") from None
    return {name: data[:, j].copy() for j, name in enumerate(header)}


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dump accepts them."""
    if isinstance(obj, dict):
        return {key: jsonable(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(val) for val in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json(path, payload: dict) -> None:
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="ascii")


def _match_grid(problem: Problem, x: np.ndarray, path) -> None:
    grid = problem.domain.x
    if x.shape != grid.shape:
        raise ReportFormatError(
            f"{path}: {x.shape[0]} rows but the problem grid has {grid.shape[0]} nodes"
        )
    # written floats round-trip exactly, so the slack only admits hand-made files
    if not np.allclose(x, grid, rtol=0.0, atol=1e-9 * problem.domain.h):
        worst = int(np.argmax(np.abs(x - grid)))
        raise ReportFormatError(
            f"{path}: grid mismatch at row {worst}: {x[worst]!r} vs {grid[worst]!r}"
        )


def write_strategy_csv(path, strategy: Strategy) -> None:
    write_csv(path, ["x", "u"], [strategy.domain.x, strategy.values])


def read_strategy_csv(path, problem: Problem) -> Strategy:
    table = read_csv(path, expected_header=["x", "u"])
    _match_grid(problem, table["x"], path)
    u = table["u"]
    lo, hi = problem.controls.u_min, problem.controls.u_max
    slack = 1e-12 * max(1.0, hi - lo)
    if np.any(u < lo - slack) or np.any(u > hi + slack):
        worst = int(np.argmax(np.maximum(lo - u, u - hi)))
        raise StrategyRangeError(
            f"{path}: control {u[worst]!r} at x={table['x'][worst]!r} "
            f"lies outside [{lo}, {hi}]"
        )
    return Strategy(problem.domain, problem.controls, u)


def write_value_csv(path, vf: ValueFunction, residual: np.ndarray, x=None) -> None:
    if x is None:
        x = vf.domain.x
    write_csv(path, ["x", "v", "dv", "d2v", "residual"], [x, vf.v, vf.dv, vf.d2v, residual])


def read_value_csv(path, problem: Problem, rho: float = float("nan")) -> ValueFunction:
    """Rebuild a value function from an exported table.

    The result carries no strategy; it supports Bellman-residual checks
    but not strategy-specific ones.
    """
    table = read_csv(path, expected_header=["x", "v", "dv", "d2v", "residual"])
    _match_grid(problem, table["x"], path)
    return ValueFunction(
        strategy=None,
        rho=float(rho),
        v=table["v"],
        dv=table["dv"],
        d2v=table["d2v"],
        centering_defect=float("nan"),
        n_guarded_nodes=0,
    )


def write_density_csv(path, dens) -> None:
    domain = dens.strategy.domain
    write_csv(path, ["x", "u", "p"], [domain.x, dens.strategy.values, dens.density])


def write_iterations_csv(path, iterations) -> None:
    # wall time stays out of the table so identical runs are byte-identical
    header = ["n", "rho", "rho_decrease", "bellman_residual_sup",
              "strategy_change_fraction", "centering_gap"]
    rows = [",".join(header)]
    for it in iterations:
        rows.append(",".join([
            str(it.n),
            FLOAT_FMT % it.rho,
            FLOAT_FMT % (float("nan") if it.rho_decrease is None else it.rho_decrease),
            FLOAT_FMT % it.bellman_residual_sup,
            FLOAT_FMT % it.strategy_change_fraction,
            FLOAT_FMT % (float("nan") if it.centering_gap is None else it.centering_gap),
        ]))
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")
