"""Quadrature and finite differences on uniform grids.

Every integral in the solver goes through the trapezoid rule so that
densities, averages, and the bias construction stay mutually consistent;
derivatives use second-order central stencils with one-sided second-order
stencils at the endpoints.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

__all__ = [
    "integrate",
    "cumulative_integral",
    "central_difference",
    "fit_polynomial_envelope",
]


def integrate(values: np.ndarray, h: float) -> float:
    """Trapezoid integral of node values with uniform spacing ``h``."""
    return float(trapezoid(values, dx=h))


def cumulative_integral(values: np.ndarray, h: float, anchor_index: int = 0) -> np.ndarray:
    """Running trapezoid integral, zero at the anchor node.

    Parameters
    ----------
    values : ndarray
        Integrand sampled on the grid.
    h : float
        Node spacing.
    anchor_index : int
        Node at which the antiderivative vanishes (0 for the left end).
    """
    out = cumulative_trapezoid(values, dx=h, initial=0.0)
    if anchor_index:
        out = out - out[anchor_index]
    return out


def central_difference(values: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    """First or second derivative on the grid.

    Interior nodes use the standard second-order central stencils; the
    endpoints use one-sided stencils of matching order (so polynomials up
    to the stencil's degree are differentiated exactly).
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 3:
        raise ValueError("need at least 3 nodes for finite differences")
    if order == 1:
        return np.gradient(values, h, edge_order=2)
    if order != 2:
        raise ValueError("order must be 1 or 2")
    h2 = h * h
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h2
    if n >= 4:
        out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2
        out[-1] = (2.0 * values[-1] - 5.0 * values[-2] + 4.0 * values[-3] - values[-4]) / h2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return out


def fit_polynomial_envelope(x: np.ndarray, values: np.ndarray, max_degree: int = 8):
    """Fit ``|values| <= C (1 + |x|^m)`` with the least workable integer m.

    The degree comes from the slope of log|values| against log|x| over
    the outer half of the sampled interval, where the leading term
    dominates; a pure log-log slope is invariant under scaling, so a
    large leading coefficient cannot masquerade as extra degree.  Nodes
    where the values (nearly) vanish are left out of the regression.

    Returns
    -------
    (m, C, fitted) : (int, float, bool)
        ``fitted`` is False when the slope exceeds ``max_degree``, i.e.
        the values grow faster than any admissible polynomial envelope.
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    r = np.abs(x)
    mag = np.abs(values)
    peak = mag.max()
    keep = (r >= 0.5 * r.max()) & (r > 0.0) & (mag > 1e-12 * peak)
    if peak == 0.0 or keep.sum() < 2 or r.max() <= 1.0:
        m = 0
    else:
        slope = float(np.polyfit(np.log(r[keep]), np.log(mag[keep]), 1)[0])
        # numerical slopes sit a hair above the true degree; don't let
        # that bump the envelope a whole order
        m = max(0, int(np.ceil(slope - 0.01)))
    fitted = m <= max_degree
    m = min(m, max_degree)
    c = float(np.max(mag / (1.0 + r**m)))
    return m, c, fitted
