"""Command-line front end: solve, evaluate, simulate, and verify.

Every run writes a manifest next to its outputs, whatever the outcome,
so a directory of results is self-describing.  Exit codes separate the
failure classes: 0 success, 1 bad config or inputs, 2 iteration budget
exhausted, 3 a statistical or verification check failed.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import __version__
from .expressions import parse_expression
from .hjb import bellman_residual, verify_solution
from .howard import evaluate, solve
from .mcsim import SimConfig, cross_validate
from .model import Strategy, coefficient_table, load_config
from .poisson import ode_residual
from .reports import (
    StrategyRangeError,
    read_strategy_csv,
    read_value_csv,
    write_density_csv,
    write_iterations_csv,
    write_json,
    write_strategy_csv,
    write_value_csv,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_CHECK = 3

# everything a bad config, formula, or input table can legitimately raise
_USER_ERRORS = (ValueError, RuntimeError, OSError)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default, which would collide
    # with the iteration-budget code; usage problems are config problems
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _load_strategy(problem, source: str) -> Strategy:
    """Strategy from a CSV path or a formula in x, range-checked against U."""
    path = Path(source)
    if source.endswith(".csv") or path.is_file():
        return read_strategy_csv(path, problem)
    # from_expression clamps into U, so compute the raw values first to
    # reject genuinely out-of-range formulas instead of silently truncating
    expr = parse_expression(source)
    vals = coefficient_table(expr, 0.0, problem.domain.x)
    lo, hi = problem.controls.u_min, problem.controls.u_max
    slack = 1e-12 * max(1.0, hi - lo)
    if (vals < lo - slack).any() or (vals > hi + slack).any():
        raise StrategyRangeError(
            f"strategy formula {source!r} leaves [{lo}, {hi}] on the grid"
        )
    return Strategy(problem.domain, problem.controls, vals)


def _parse_rho(text: str) -> float:
    """A float literal, or a path to a JSON report holding a "rho" field."""
    try:
        return float(text)
    except ValueError:
        pass
    with open(text, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    return float(payload["rho"])


def _problem_echo(cfg) -> dict:
    return {key: cfg.raw[key] for key in sorted(cfg.raw)}


def _write_manifest(out_dir: Path, command: str, args, echo, status: int) -> None:
    write_json(out_dir / "manifest.json", {
        "command": command,
        "config": str(args.config),
        "out_dir": str(out_dir),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "problem": echo,
        "exit_status": status,
    })


def _run(command: str, args, body) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_CONFIG
    echo = None
    try:
        try:
            cfg = load_config(args.config)
            echo = _problem_echo(cfg)
            status = body(cfg, out_dir)
        except _USER_ERRORS as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_CONFIG
    finally:
        _write_manifest(out_dir, command, args, echo, status)
    return status


def cmd_solve(args) -> int:
    def body(cfg, out_dir):
        res = solve(cfg.problem, cfg.initial_strategy)
        residual = bellman_residual(cfg.problem, res.value, res.rho)
        write_iterations_csv(out_dir / "iterations.csv", res.iterations)
        write_strategy_csv(out_dir / "strategy.csv", res.strategy)
        write_value_csv(out_dir / "value_function.csv", res.value, residual.full_form)
        write_json(out_dir / "solve_result.json", {
            "rho": res.rho,
            "converged": res.converged,
            "reason": res.reason,
            "n_iterations": len(res.iterations),
            "bellman_sup_core": res.iterations[-1].bellman_residual_sup,
            "tail_mass": res.density.tail_mass,
            "centering_defect": res.value.centering_defect,
            "n_guarded_nodes": res.value.n_guarded_nodes,
            "warnings": list(res.warnings),
            "version": __version__,
        })
        return EXIT_OK if res.converged else EXIT_BUDGET

    return _run("solve", args, body)


def cmd_evaluate(args) -> int:
    def body(cfg, out_dir):
        strat = _load_strategy(cfg.problem, args.strategy)
        dens, rho, vf = evaluate(cfg.problem, strat)
        write_density_csv(out_dir / "density.csv", dens)
        write_value_csv(out_dir / "value_function.csv", vf, ode_residual(cfg.problem, vf))
        write_json(out_dir / "rho.json", {
            "rho": rho,
            "tail_mass": dens.tail_mass,
            "centering_defect": vf.centering_defect,
        })
        return EXIT_OK

    return _run("evaluate", args, body)


def cmd_simulate(args) -> int:
    def body(cfg, out_dir):
        if args.strategy is None:
            res = solve(cfg.problem, cfg.initial_strategy)
            strat, rho_q = res.strategy, res.rho
        else:
            strat, rho_q = _load_strategy(cfg.problem, args.strategy), None
        if args.rho is not None:
            rho_q = _parse_rho(args.rho)
        config = SimConfig(dt=args.dt, horizon=args.horizon, burn_in=args.burn_in,
                           n_paths=args.paths, seed=args.seed)
        rep = cross_validate(cfg.problem, strat, config, rho_q)
        write_json(out_dir / "mc_report.json", {
            "rho_quadrature": rep.rho_quadrature,
            "mean": rep.estimate.mean,
            "std_error": rep.estimate.std_error,
            "n_batches": rep.estimate.n_batches,
            "path_means": list(rep.estimate.path_means),
            "fraction_time_outside_core": rep.estimate.fraction_time_outside_core,
            "abs_difference": rep.abs_difference,
            "bias_allowance": rep.bias_allowance,
            "tolerance": rep.tolerance,
            "passed": rep.passed,
            "dt": config.dt,
            "horizon": config.horizon,
            "burn_in": config.burn_in,
            "n_paths": config.n_paths,
            "seed": config.seed,
        })
        return EXIT_OK if rep.passed else EXIT_CHECK

    return _run("simulate", args, body)


def cmd_verify(args) -> int:
    def body(cfg, out_dir):
        rho = _parse_rho(args.rho)
        vf = read_value_csv(args.value, cfg.problem, rho)
        rep = verify_solution(cfg.problem, vf, rho)
        payload = rep.summary()
        payload["rho"] = rho
        payload["value_file"] = str(args.value)
        write_json(out_dir / "verification.json", payload)
        return EXIT_OK if rep.verified else EXIT_CHECK

    return _run("verify", args, body)


def build_parser() -> _Parser:
    parser = _Parser(prog="ergodic-control",
                     description="Average-cost control of 1-d diffusions on a grid.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML problem file")
        p.add_argument("--out-dir", default="out", help="directory for reports (default: out)")

    p_solve = sub.add_parser("solve", help="run the policy iteration")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("evaluate", help="average cost and bias of a fixed strategy")
    common(p_eval)
    p_eval.add_argument("--strategy", required=True,
                        help="formula in x, or path to a strategy CSV")
    p_eval.set_defaults(func=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo cross-check of the average cost")
    common(p_sim)
    p_sim.add_argument("--strategy", default=None,
                       help="formula or CSV; default: solve first and use the optimum")
    p_sim.add_argument("--rho", default=None,
                       help="reference average cost (number or JSON report with a rho field)")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--dt", type=float, default=1e-3)
    p_sim.add_argument("--horizon", type=float, default=2000.0)
    p_sim.add_argument("--burn-in", type=float, default=100.0)
    p_sim.add_argument("--paths", type=int, default=4)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="check a (value, rho) pair against the Bellman equation")
    common(p_ver)
    p_ver.add_argument("--value", required=True, help="path to a value_function CSV")
    p_ver.add_argument("--rho", required=True,
                       help="average cost (number or JSON report with a rho field)")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as stop:
        # argparse handles --help/--version/usage errors by exiting;
        # surface them as a return code so embedders never see the raise
        return int(stop.code or 0)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
