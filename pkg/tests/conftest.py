import pytest

import ergodic_control as ec


@pytest.fixture(scope="session")
def solved():
    """Converged solves of the named benchmarks, shared across test files."""
    out = {}
    for name in ("ou", "drift_control", "diffusion_control", "drift_shift"):
        prob = ec.catalog.build(name)
        out[name] = ec.solve(prob)
    return out
