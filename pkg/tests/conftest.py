import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gamma_fdcalc import QuadratureGrid, ScalarField, Window, cosine_bump, polynomial_bump, triangular_bump

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def unit():
    return Window.cube(0.0, 1.0)


@pytest.fixture
def grid(unit):
    return QuadratureGrid(unit, 64, "gauss")


@pytest.fixture
def psi():
    return cosine_bump(0.5, 0.45, 1.0)


@pytest.fixture
def xi():
    return polynomial_bump(0.55, 0.35, 1.3)


@pytest.fixture
def eta():
    return triangular_bump(0.4, 0.3, 0.8)


@pytest.fixture
def identity_field():
    """psi(x) = x on [0, 4]: lets hand examples pick psi(a) = a."""
    return ScalarField(lambda X: X[..., 0], Window.cube(0.0, 4.0), "id", 4.0)


def random_points(rng, n, lo=0.0, hi=1.0):
    return lo + (hi - lo) * rng.random((n, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
