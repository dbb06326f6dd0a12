"""End-to-end acceptance gates.

One test per gate, in a fixed order, each printing a single PASS/FAIL
line with the measured numbers before asserting.  The drift-control gate
asserts its published targets as stated; see the assertion message there
for what the solver actually finds.
"""

import time

import numpy as np
import pytest

import ergodic_control as ec
from ergodic_control.density import adjoint_residual, average_cost, compute_density
from ergodic_control.hjb import verify_solution
from ergodic_control.howard import evaluate, solve
from ergodic_control.mcsim import SimConfig, cross_validate, simulate_average_cost
from ergodic_control.model import Strategy
from ergodic_control.numerics import integrate
from ergodic_control.poisson import ode_residual

TRIO = ("ou", "drift_control", "diffusion_control")


def scoreboard(tag, ok, detail):
    print(f"acceptance {tag}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_1_control_free_benchmark():
    prob = ec.catalog.build("ou")
    t0 = time.perf_counter()
    res = solve(prob)
    elapsed = time.perf_counter() - t0

    x = prob.domain.x
    window = np.abs(x) <= 4.0
    rho_err = abs(res.rho - 1.0)
    v_err = float(np.max(np.abs(res.value.v - (x * x - 1) / 2)[window]))
    ok = rho_err <= 1e-4 and v_err <= 1e-3 and elapsed < 1.0
    scoreboard("1 control-free benchmark", ok,
               f"rho_err={rho_err:.2e} v_err={v_err:.2e} t={elapsed:.2f}s")
    assert res.converged
    assert rho_err <= 1e-4
    assert v_err <= 1e-3
    assert elapsed < 1.0


def test_2_drift_control_targets():
    prob = ec.catalog.build("drift_control")
    t0 = time.perf_counter()
    res = solve(prob)
    elapsed = time.perf_counter() - t0

    # independent oracle: evaluate every constant strategy on the control grid
    scan = []
    for u in prob.controls.values:
        _, rho_u, _ = evaluate(prob, Strategy.constant(prob, u))
        scan.append(rho_u)
    scan = np.asarray(scan)
    best = int(np.argmin(scan))
    best_u, best_rho = float(prob.controls.values[best]), float(scan[best])
    assert best_u == 1.0
    assert best_rho == pytest.approx(2.0, abs=1e-4)

    core = prob.domain.core_mask
    strategy_is_flat_one = bool(np.all(res.strategy.values[core] == 1.0))
    rho_err = abs(res.rho - 2.0)
    ok = (rho_err <= 1e-3 and strategy_is_flat_one
          and abs(res.rho - best_rho) <= 1e-3 and elapsed < 10.0)
    scoreboard("2 drift control", ok,
               f"rho={res.rho:.10f} target=2 best_constant=(u={best_u}, rho={best_rho:.6f}) "
               f"flat_strategy={strategy_is_flat_one} t={elapsed:.2f}s")
    assert elapsed < 10.0
    assert res.converged
    assert rho_err <= 1e-3 and strategy_is_flat_one, (
        "published target says the flat strategy u=1 (average cost 2) is optimal, "
        f"and u=1 is indeed the best constant (scan minimum {best_rho:.6f} at u={best_u}); "
        f"but the iteration converges to a two-level strategy with average cost "
        f"{res.rho:.10f} < 2, improving on every constant by switching to the "
        "strong pull where |x| > 1 makes the effort worthwhile"
    )


def test_3_diffusion_control_targets():
    prob = ec.catalog.build("diffusion_control")
    res = solve(prob)
    core = prob.domain.core_mask
    rho_err = abs(res.rho - 0.125)
    flat = bool(np.all(res.strategy.values[core] == 0.5))
    ok = rho_err <= 1e-3 and flat
    scoreboard("3 diffusion control", ok,
               f"rho={res.rho:.10f} target=0.125 quiet_strategy={flat}")
    assert res.converged
    assert rho_err <= 1e-3
    assert flat


def test_4_improvement_never_increases_cost():
    worst = np.inf
    n_runs = 0
    t0 = time.perf_counter()
    for seed in range(20):
        prob = ec.catalog.random_problem(seed)
        for start in range(3):
            res = solve(prob, ec.catalog.random_strategy(prob, seed=1000 * seed + start))
            n_runs += 1
            for it in res.iterations:
                if it.rho_decrease is not None:
                    worst = min(worst, it.rho_decrease)
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-10
    scoreboard("4 monotone improvement", ok,
               f"runs={n_runs} worst_decrease={worst:.2e} t={elapsed:.2f}s")
    assert n_runs >= 60
    assert worst >= -1e-10


def test_5_multi_start_uniqueness():
    gaps = {}
    for name in TRIO:
        prob = ec.catalog.build(name)
        lo = solve(prob, Strategy.constant(prob, prob.controls.u_min))
        hi = solve(prob, Strategy.constant(prob, prob.controls.u_max))
        dv = lo.value.v - hi.value.v
        dv = dv - dv.mean()
        gaps[name] = (abs(lo.rho - hi.rho),
                      float(np.max(np.abs(dv[prob.domain.core_mask]))))
    ok = all(dr <= 1e-5 and dvs <= 1e-3 for dr, dvs in gaps.values())
    detail = " ".join(f"{k}:drho={a:.1e},dv={b:.1e}" for k, (a, b) in gaps.items())
    scoreboard("5 multi-start uniqueness", ok, detail)
    for name, (dr, dvs) in gaps.items():
        assert dr <= 1e-5, name
        assert dvs <= 1e-3, name


def test_6_bellman_residual_bounds(solved):
    sups = {}
    for name in TRIO:
        res = solved[name]
        report = verify_solution(res.problem, res.value, res.rho)
        sups[name] = (report.sup_core_full, report.form_agreement_defect,
                      report.form_agreement_tol)
    ok = all(s <= 5e-3 and d <= t for s, d, t in sups.values())
    detail = " ".join(f"{k}:sup={s:.1e}" for k, (s, d, t) in sups.items())
    scoreboard("6 ergodic Bellman residual", ok, detail)
    for name, (s, d, t) in sups.items():
        assert s <= 5e-3, name
        assert d <= t, name  # full and reduced forms vanish together


def test_7_density_and_bias_internal_checks(solved):
    rows = []
    for name in ("ou", "drift_control", "diffusion_control", "drift_shift"):
        res = solved[name]
        prob = res.problem
        mass_defect = abs(integrate(res.density.density, prob.domain.h) - 1.0)
        centering = abs(res.value.centering_defect)
        rows.append((name, mass_defect, centering))
        assert mass_defect <= 1e-10, name
        assert centering <= 1e-8, name

    adjoints = {}
    for name in ("ou", "diffusion_control", "drift_shift"):
        res = solved[name]
        adj = adjoint_residual(res.problem, res.density)
        assert adj is not None, name  # these converge to jump-free strategies
        adjoints[name] = adj
        assert adj <= 1e-3, name

    # The pointwise equation check re-derives v'' by differencing the
    # quadrature v', so it carries its own error floor: it needs a grid
    # inside the h^2 differencing regime, and it is only meaningful on
    # nodes where the density is large enough that inverting the flux by
    # 1/p does not amplify quadrature roundoff past the tolerance.  On
    # such nodes the residual halves twice per node doubling; below the
    # density cutoff it stops converging altogether.
    odes = {}
    for name, n_nodes in (("ou", 4001), ("drift_control", 8001),
                          ("diffusion_control", 8001), ("drift_shift", 9601)):
        prob = ec.catalog.build(name, n_nodes=n_nodes)
        res = solve(prob)
        scope = prob.domain.core_mask & (res.density.density >= 1e-9)
        odes[name] = float(np.max(np.abs(ode_residual(prob, res.value))[scope]))
        assert odes[name] <= 1e-3, name

    worst = [max(r[k] for r in rows) for k in (1, 2)]
    scoreboard("7 density and bias checks", True,
               f"mass<={worst[0]:.1e} centering<={worst[1]:.1e} "
               f"ode<={max(odes.values()):.1e} adjoint<={max(adjoints.values()):.1e}")


def test_8_monte_carlo_cross_validation(solved):
    cfg = SimConfig(dt=1e-3, horizon=2000.0, burn_in=100.0, n_paths=4, seed=7)
    details = []
    for name in TRIO:
        res = solved[name]
        t0 = time.perf_counter()
        report = cross_validate(res.problem, res.strategy, cfg, rho_quadrature=res.rho)
        elapsed = time.perf_counter() - t0
        replay = simulate_average_cost(res.problem, res.strategy, cfg)
        details.append((name, report, elapsed, replay))

    ok = all(r.passed and t < 120.0 and rp.mean == r.estimate.mean for _, r, t, rp in details)
    scoreboard("8 Monte Carlo cross-check", ok,
               " ".join(f"{n}:diff={r.abs_difference:.1e}/tol={r.tolerance:.1e},t={t:.1f}s"
                        for n, r, t, _ in details))
    for name, report, elapsed, replay in details:
        assert report.passed, (name, report.abs_difference, report.tolerance)
        assert elapsed < 120.0, name
        assert replay.mean == report.estimate.mean, name
        assert replay.path_means == report.estimate.path_means, name


def test_9_grid_refinement_order():
    bases = {"ou": 4001, "drift_control": 2001, "diffusion_control": 2001}
    details = []
    all_ok = True
    for name, base in bases.items():
        rhos = [solve(ec.catalog.build(name, n_nodes=n)).rho
                for n in (base, 2 * base - 1, 4 * base - 3)]
        d1, d2 = rhos[1] - rhos[0], rhos[2] - rhos[1]
        floor = 1e-10 * (1.0 + abs(rhos[-1]))
        if max(abs(d1), abs(d2)) < floor:
            # changes are at roundoff scale, below any measurable grid error
            details.append(f"{name}:converged(|d|<{floor:.0e})")
            continue
        ratio = abs(d1) / abs(d2)
        ok = 2.5 <= ratio <= 6.0
        all_ok &= ok
        details.append(f"{name}:ratio={ratio:.2f}")
        assert 2.5 <= ratio <= 6.0, (name, d1, d2, ratio)
    scoreboard("9 grid refinement order", all_ok, " ".join(details))
