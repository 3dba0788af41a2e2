import numpy as np
import pytest

from zerocoupling.measures import DiscreteMeasure
from zerocoupling.transport import solve_zero_coupling


@pytest.fixture(scope="session", autouse=True)
def _warm_solver():
    """Trigger the solver's one-time JIT compilation before any timed test."""
    rng = np.random.default_rng(0)
    mu = DiscreteMeasure(rng.normal(size=(3, 2)) + 2.0, rng.random(3) + 0.1)
    nu = DiscreteMeasure(rng.normal(size=(3, 2)) - 2.0, rng.random(3) + 0.1)
    solve_zero_coupling(mu, nu, reservoir=True)
