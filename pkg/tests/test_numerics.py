import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergodic_control.numerics import (
    central_difference,
    cumulative_integral,
    fit_polynomial_envelope,
    integrate,
)


def test_cumulative_of_ones():
    values = np.ones(11)
    out = cumulative_integral(values, h=0.1)
    np.testing.assert_allclose(out, np.linspace(0, 1, 11), atol=1e-15)


def test_cumulative_of_zeros():
    out = cumulative_integral(np.zeros(7), h=0.3)
    np.testing.assert_array_equal(out, np.zeros(7))


def test_cumulative_of_identity():
    x = np.linspace(0, 1, 101)
    out = cumulative_integral(x, h=x[1] - x[0])
    assert out[-1] == pytest.approx(0.5, abs=1e-4)


def test_cumulative_anchor_shifts_zero():
    x = np.linspace(0, 1, 101)
    out = cumulative_integral(x, h=x[1] - x[0], anchor_index=50)
    assert out[50] == 0.0
    # anchoring subtracts a constant, so differences are unchanged
    base = cumulative_integral(x, h=x[1] - x[0])
    np.testing.assert_allclose(out - out[0], base - base[0], atol=1e-15)


def test_integrate_constant():
    values = np.ones(4001)
    assert integrate(values, h=16.0 / 4000) == pytest.approx(16.0, rel=1e-14)


def test_integrate_gaussian_mass():
    x = np.linspace(-8, 8, 4001)
    pdf = np.exp(-x * x / 2) / np.sqrt(2 * np.pi)
    assert integrate(pdf, h=x[1] - x[0]) == pytest.approx(1.0, abs=1e-8)


def test_integrate_odd_function():
    x = np.linspace(-8, 8, 4001)
    assert integrate(x * np.exp(-x * x), h=x[1] - x[0]) == pytest.approx(0.0, abs=1e-12)


def test_second_difference_exact_for_quadratics():
    x = np.arange(-1, 1 + 1e-12, 0.01)
    d2 = central_difference(x * x, h=0.01, order=2)
    np.testing.assert_allclose(d2, 2.0, atol=1e-9)


def test_first_difference_of_constant():
    d1 = central_difference(np.full(50, 3.7), h=0.2, order=1)
    np.testing.assert_array_equal(d1, np.zeros(50))


def test_first_difference_of_sine():
    h = 0.01
    x = np.arange(-0.5, 0.5 + 1e-12, h)
    d1 = central_difference(np.sin(x), h=h, order=1)
    at_zero = d1[np.argmin(np.abs(x))]
    assert abs(at_zero - 1.0) <= h * h


def test_difference_orders_validated():
    with pytest.raises(ValueError):
        central_difference(np.zeros(5), h=0.1, order=3)


@settings(max_examples=40, deadline=None)
@given(
    coeffs=st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    n=st.integers(16, 200),
)
def test_integrate_is_linear(coeffs, n):
    a, b = coeffs
    rng = np.random.default_rng(n)
    f = rng.standard_normal(n)
    g = rng.standard_normal(n)
    h = 0.05
    combined = integrate(a * f + b * g, h)
    split = a * integrate(f, h) + b * integrate(g, h)
    assert combined == pytest.approx(split, rel=1e-12, abs=1e-12)


def test_differentiating_the_running_integral_recovers_the_integrand():
    h = 1e-3
    x = np.arange(0, 2 + 1e-12, h)
    g = np.cos(3 * x)
    recovered = central_difference(cumulative_integral(g, h), h, order=1)
    interior = slice(2, -2)
    np.testing.assert_allclose(recovered[interior], g[interior], atol=5 * h * h)


def test_envelope_degree_for_linear_growth():
    x = np.linspace(-8, 8, 801)
    degree, constant, fitted = fit_polynomial_envelope(x, 3 * x)
    assert fitted
    assert degree == 1
    assert constant <= 3.0 + 1e-9


def test_envelope_degree_for_quadratic():
    x = np.linspace(-8, 8, 801)
    degree, _, fitted = fit_polynomial_envelope(x, x * x + 1)
    assert fitted
    assert degree == 2


def test_envelope_of_bounded_values():
    x = np.linspace(-8, 8, 801)
    degree, constant, fitted = fit_polynomial_envelope(x, np.tanh(x))
    assert fitted
    assert degree == 0
    assert constant <= 1.0 + 1e-9
