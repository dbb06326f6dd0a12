import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ergodic_control as ec
from ergodic_control.density import (
    DomainTooSmallError,
    adjoint_residual,
    average_cost,
    compute_density,
    stationary_expectation,
)
from ergodic_control.model import ControlSet, Domain, Problem, Strategy, ToleranceSet


def make_problem(drift, diffusion, cost, u_min, u_max, n_controls,
                 x_min=-8.0, x_max=8.0, n_nodes=4001, **tol):
    return Problem.from_sources(
        drift, diffusion, cost,
        ControlSet(u_min, u_max, n_controls),
        Domain(x_min, x_max, n_nodes),
        ToleranceSet(**tol),
    )


@pytest.fixture(scope="module")
def ou_problem():
    return ec.catalog.build("ou")


@pytest.fixture(scope="module")
def ou_density(ou_problem):
    return compute_density(ou_problem, Strategy.constant(ou_problem, 0.0))


def test_mean_reverting_density_is_standard_normal(ou_density, ou_problem):
    at_zero = ou_density.density[ou_problem.domain.zero_index]
    assert at_zero == pytest.approx(0.3989422804014327, abs=1e-6)


def test_density_is_a_probability(ou_density, ou_problem):
    mass = ec.numerics.integrate(ou_density.density, ou_problem.domain.h)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert (ou_density.density > 0).all()


def test_controlled_noise_variance():
    # constant sigma = u0 and unit restoring force: variance u0^2 / 2
    prob = make_problem("-x", "u", "x*x", 0.5, 2.0, 61, x_min=-10.0, x_max=10.0,
                        tail_mass_tol=2e-2)
    dens = compute_density(prob, Strategy.constant(prob, 2.0))
    second_moment = stationary_expectation(dens, prob.domain.x ** 2)
    assert second_moment == pytest.approx(2.0, abs=1e-6)


def test_two_sided_exponential_density():
    # steep clamped ramp sampling -1 at x >= 0 and +1 at x < 0, so the
    #node values on the right half-line are exactly the constant branch
    prob = make_problem("2*min(max(-100000000*x, 0), 1) - 1", "sqrt(2)", "x*x",
                        0.0, 0.0, 1, x_min=-16.0, x_max=16.0)
    dens = compute_density(prob, Strategy.constant(prob, 0.0))
    x = prob.domain.x
    p0 = dens.density[prob.domain.zero_index]
    p1 = dens.density[np.argmin(np.abs(x - 1.0))]
    assert p0 / p1 == pytest.approx(np.e, abs=1e-4)


def test_expectation_of_one_is_one(ou_density):
    assert stationary_expectation(ou_density, np.ones_like(ou_density.density)) == \
        pytest.approx(1.0, abs=1e-10)


def test_expectation_of_odd_function_vanishes(ou_density, ou_problem):
    assert stationary_expectation(ou_density, ou_problem.domain.x) == \
        pytest.approx(0.0, abs=1e-8)


def test_expectation_of_square_is_gaussian_variance(ou_density, ou_problem):
    assert stationary_expectation(ou_density, ou_problem.domain.x ** 2) == \
        pytest.approx(1.0, abs=1e-6)


def test_average_cost_control_free(ou_problem, ou_density):
    assert average_cost(ou_problem, ou_density) == pytest.approx(1.0, abs=1e-5)


def test_average_cost_scaled_restoring_force():
    prob = ec.catalog.build("drift_control")
    dens = compute_density(prob, Strategy.constant(prob, 1.25))
    # stationary variance 1/u0, plus the control running cost u0
    assert average_cost(prob, dens) == pytest.approx(1 / 1.25 + 1.25, abs=1e-5)


def test_average_cost_of_constant_cost():
    prob = make_problem("-x", "sqrt(2)", "3.5", 0.0, 0.0, 1)
    dens = compute_density(prob, Strategy.constant(prob, 0.0))
    assert average_cost(prob, dens) == pytest.approx(3.5, rel=5e-15)


def test_adjoint_residual_mean_reverting(ou_problem, ou_density):
    res = adjoint_residual(ou_problem, ou_density)
    assert res is not None
    assert 0.0 <= res <= 1e-3


def test_adjoint_residual_flat_density():
    # b = 0 keeps no mass in any core, so the tail gate must be disabled
    prob = make_problem("0", "1", "x*x", 0.0, 0.0, 1, x_min=-1.0, x_max=1.0,
                        n_nodes=401, tail_mass_tol=1.0)
    dens = compute_density(prob, Strategy.constant(prob, 0.0))
    res = adjoint_residual(prob, dens)
    assert res is not None
    assert res <= 1e-10


def test_adjoint_residual_skipped_for_jumpy_strategies(solved):
    res_dc = solved["drift_control"]
    prob = ec.catalog.build("drift_control")
    assert res_dc.strategy.max_adjacent_jump() == pytest.approx(1.0)
    assert adjoint_residual(prob, res_dc.density) is None


def test_tail_mass_gate():
    with pytest.raises(DomainTooSmallError):
        prob = make_problem("-x", "sqrt(2)", "x*x", 0.0, 0.0, 1,
                            x_min=-2.0, x_max=2.0, n_nodes=401)
        compute_density(prob, Strategy.constant(prob, 0.0))


def test_tail_mass_value_is_small_on_wide_domain(ou_density):
    assert 0.0 <= ou_density.tail_mass < 1e-3


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_density_positive_and_normalized_for_random_strategies(seed):
    prob = ec.catalog.build("drift_control", n_nodes=801)
    strat = ec.catalog.random_strategy(prob, seed=seed)
    dens = compute_density(prob, strat)
    assert (dens.density > 0).all()
    mass = ec.numerics.integrate(dens.density, prob.domain.h)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_normalization_constant_stable_across_strategies():
    prob = ec.catalog.build("drift_control", n_nodes=801)
    consts = []
    for seed in range(10):
        strat = ec.catalog.random_strategy(prob, seed=seed)
        dens = compute_density(prob, strat)
        assert np.isfinite(dens.normalization) and dens.normalization > 0
        consts.append(dens.normalization)
    # bounded control interval keeps the constants in one modest bracket
    assert max(consts) / min(consts) < 100.0


def test_refinement_shrinks_average_cost_changes():
    rhos = []
    for n in (1001, 2001, 4001):
        prob = ec.catalog.build("soft_quartic", n_nodes=n)
        dens = compute_density(prob, Strategy.constant(prob, 0.0))
        rhos.append(average_cost(prob, dens))
    d1, d2 = abs(rhos[1] - rhos[0]), abs(rhos[2] - rhos[1])
    assert d2 < d1
    assert 2.0 <= d1 / d2 <= 8.0
