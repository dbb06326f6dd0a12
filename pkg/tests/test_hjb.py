import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ergodic_control as ec
from ergodic_control.hjb import bellman_residual, verify_solution
from ergodic_control.model import ControlSet, Domain, Problem, Strategy, ToleranceSet
from ergodic_control.poisson import ValueFunction


def control_free(cost):
    return Problem.from_sources(
        "-x", "sqrt(2)", cost,
        ControlSet(0.0, 0.0, 1),
        Domain(-8.0, 8.0, 801),
        ToleranceSet(),
    )


def zero_value(problem, rho=0.0):
    z = np.zeros(problem.domain.n_nodes)
    return ValueFunction(
        strategy=Strategy.constant(problem, problem.controls.u_min),
        rho=rho,
        v=z,
        dv=z.copy(),
        d2v=z.copy(),
        centering_defect=0.0,
        n_guarded_nodes=0,
    )


def test_zero_data_has_zero_residual():
    prob = control_free("0")
    res = bellman_residual(prob, zero_value(prob), 0.0)
    assert (res.full_form == 0.0).all()
    assert (res.reduced_form == 0.0).all()
    assert res.sup_core == 0.0
    assert res.sup_all == 0.0


def test_zero_value_residual_is_the_cost():
    prob = control_free("x*x")
    res = bellman_residual(prob, zero_value(prob), 0.0)
    x = prob.domain.x
    np.testing.assert_array_equal(res.full_form, x * x)


def test_ties_break_to_the_smallest_control():
    prob = Problem.from_sources(
        "-x", "sqrt(2)", "u*u",
        ControlSet(-1.0, 1.0, 2),
        Domain(-8.0, 8.0, 801),
        ToleranceSet(),
    )
    res = bellman_residual(prob, zero_value(prob), 0.0)
    assert (res.argmin_strategy.values == -1.0).all()


def test_converged_solves_meet_the_tolerance(solved):
    for name, res in solved.items():
        report = verify_solution(res.problem, res.value, res.rho)
        tol = res.problem.tolerances.residual_tol
        assert report.sup_core_full <= tol, name
        assert report.verified, name


def test_form_agreement_on_converged_solves(solved):
    for name, res in solved.items():
        report = verify_solution(res.problem, res.value, res.rho)
        assert report.form_agreement_defect <= report.form_agreement_tol, name


def test_whole_catalog_verifies():
    for name in ec.catalog.names():
        prob = ec.catalog.build(name)
        res = ec.howard.solve(prob)
        assert res.converged, name
        report = verify_solution(prob, res.value, res.rho)
        assert report.verified, name


def test_wrong_average_cost_is_rejected(solved):
    res = solved["ou"]
    baseline = bellman_residual(res.problem, res.value, res.rho)
    shifted = bellman_residual(res.problem, res.value, res.rho + 0.1)
    gap = (baseline.full_form - shifted.full_form) - 0.1
    assert np.max(np.abs(gap)) <= 1e-12
    report = verify_solution(res.problem, res.value, res.rho + 0.1)
    assert not report.verified
    assert report.sup_core_full == pytest.approx(0.1, abs=1e-4)


def test_bias_is_only_determined_up_to_a_constant(solved):
    res = solved["diffusion_control"]
    lifted = dataclasses.replace(res.value, v=res.value.v + 5.0)
    a = bellman_residual(res.problem, res.value, res.rho)
    b = bellman_residual(res.problem, lifted, res.rho)
    np.testing.assert_array_equal(a.full_form, b.full_form)
    np.testing.assert_array_equal(a.reduced_form, b.reduced_form)
    np.testing.assert_array_equal(a.argmin_strategy.values, b.argmin_strategy.values)
    assert verify_solution(res.problem, lifted, res.rho).verified


@settings(max_examples=20, deadline=None)
@given(shift=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_constant_shifts_never_change_the_residual(shift, solved):
    res = solved["ou"]
    lifted = dataclasses.replace(res.value, v=res.value.v + shift)
    a = bellman_residual(res.problem, res.value, res.rho)
    b = bellman_residual(res.problem, lifted, res.rho)
    np.testing.assert_array_equal(a.full_form, b.full_form)
