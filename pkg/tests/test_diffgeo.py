import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from gamma_fdcalc import (
    Configuration,
    FunctionOnConfigs,
    TensorPower,
    VectorField,
    d_minus,
    d_minus_directional,
    d_plus,
    d_plus_directional,
    directional_derivative,
    divergence,
    falling_pair,
    gradient,
    laplacian,
    linear_function,
    pairing_function,
)
from gamma_fdcalc.diffgeo import symmetric_divergence_stack
from gamma_fdcalc.errors import DuplicatePoint, MissingPoint, SupportExceedsWindow
from gamma_fdcalc.kernels import MultiBump, ScalarField, SumOverVariables, Window

configs = st.lists(st.floats(0.0, 1.0), max_size=6, unique=True).map(Configuration)


def quad(f, lo=0.0, hi=1.0):
    return sp_integrate.quad(f, lo, hi, limit=200, points=[0.05, 0.2, 0.5, 0.9, 0.95])[0]


def generating(xi):
    return FunctionOnConfigs(lambda G: np.prod(1.0 + xi(G), axis=1), xi.dim, xi.support, "E_xi")


def test_d_plus_examples(identity_field, psi):
    g = Configuration([1.0, 2.0])
    assert d_plus(FunctionOnConfigs.constant(3.0), g, 3.0) == 0.0
    assert d_plus(linear_function(psi), Configuration([0.2]), 0.4) == pytest.approx(psi.value(0.4), rel=1e-14)
    assert d_plus(pairing_function(TensorPower(identity_field, 2)), g, 3.0) == 18.0


def test_d_minus_examples(psi):
    g = Configuration([0.2, 0.4])
    assert d_minus(FunctionOnConfigs.constant(3.0), g, 0.2) == 0.0
    assert d_minus(linear_function(psi), g, 0.4) == pytest.approx(-psi.value(0.4), rel=1e-14)


def test_difference_errors(psi):
    F = linear_function(psi)
    with pytest.raises(DuplicatePoint):
        d_plus(F, Configuration([0.2]), 0.2)
    with pytest.raises(MissingPoint):
        d_minus(F, Configuration([0.2]), 0.3)


def test_d_plus_directional_examples(psi, xi, grid):
    g = Configuration([0.3, 0.7])
    assert d_plus_directional(FunctionOnConfigs.constant(1.0), g, psi, grid) == 0.0
    ref = quad(lambda t: psi.value(t) * xi.value(t))
    assert d_plus_directional(linear_function(xi), g, psi, grid) == pytest.approx(ref, abs=5e-4)
    # eigen-relation: both sides on the same grid
    E = generating(xi)
    lhs = d_plus_directional(E, g, psi, grid)
    from gamma_fdcalc import integrate

    assert lhs == pytest.approx(integrate(psi * xi, grid) * E(g), rel=1e-12)


def test_d_minus_directional_examples(psi, xi, eta):
    f = MultiBump([xi, eta])
    F = pairing_function(f)
    assert d_minus_directional(F, Configuration([]), psi) == 0.0
    g = Configuration([0.3, 0.5, 0.6])
    assert d_minus_directional(F, g, psi) == pytest.approx(-falling_pair(g, SumOverVariables(psi, f)), rel=1e-12)


def test_sum_of_deaths_hand_example(identity_field):
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0.0, 4.0), "1", 1.0)
    F = pairing_function(TensorPower(identity_field, 2))
    g = Configuration([1.0, 2.0])
    assert F(g) == 4.0
    assert d_minus_directional(F, g, one) == -8.0


@given(configs, st.integers(1, 3))
def test_sum_of_deaths_is_minus_nF(psi, xi, eta, g, n):
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0.0, 1.0), "1", 1.0)
    F = pairing_function(MultiBump([psi, xi, eta][:n]))
    assert d_minus_directional(F, g, one) == pytest.approx(-n * F(g), rel=1e-12, abs=1e-13)


def test_divergence_examples(psi, grid):
    g = Configuration([0.3, 0.6])
    assert divergence(VectorField.zero(), g, grid) == 0.0
    V = VectorField.from_fields(psi, -1.0 * psi)
    from gamma_fdcalc import integrate

    expected = 2 * (psi.value(0.3) + psi.value(0.6)) - 2 * integrate(psi, grid)
    assert divergence(V, g, grid) == pytest.approx(expected, rel=1e-13)
    assert symmetric_divergence_stack(V, g.points[None], grid)[0] == pytest.approx(expected, rel=1e-13)


def test_laplacian_examples(psi, grid):
    g = Configuration([0.3, 0.6])
    assert laplacian(FunctionOnConfigs.constant(2.0), g, grid) == 0.0
    ref = 2 * (psi.value(0.3) + psi.value(0.6)) - 2 * quad(psi.value)
    assert laplacian(linear_function(psi), g, grid) == pytest.approx(ref, abs=1e-6)


@given(configs)
def test_laplacian_is_div_grad(psi, xi, grid, g):
    F = pairing_function(MultiBump([psi, xi])) + linear_function(xi)
    assert laplacian(F, g, grid) == pytest.approx(divergence(gradient(F), g, grid), rel=1e-12, abs=1e-12)


@given(configs, st.floats(0.0, 1.0))
def test_gradient_symmetry(psi, xi, g, x):
    if x in g:
        return
    F = pairing_function(MultiBump([psi, xi]))
    DF = gradient(F)
    X = np.array([[x]])
    vp = DF.vplus(g.points[None], X)[0]
    vm = DF.vminus(g.union(x).points[None], X)[0]
    # exact up to summation order: the two sides add x at different stack positions
    assert vp == pytest.approx(-vm, rel=1e-13, abs=1e-15)


def test_directional_derivative_bump_field(psi, xi, grid):
    from gamma_fdcalc import integrate

    V = VectorField.from_fields(psi, None)
    g = Configuration([0.2, 0.8])
    assert directional_derivative(linear_function(xi), V, g, grid) == pytest.approx(integrate(psi * xi, grid), rel=1e-12)


def test_support_outside_window(psi):
    from gamma_fdcalc import QuadratureGrid

    small = QuadratureGrid(Window.cube(0.3, 0.7), 16)
    with pytest.raises(SupportExceedsWindow):
        laplacian(linear_function(psi), Configuration([0.5]), small)


def test_varying_intensity(psi, grid):
    ramp = ScalarField(lambda X: 2.0 * X[..., 0], Window.cube(0, 1), "ramp", 2.0)
    ref = 2 * psi.value(0.5) - 2 * quad(lambda t: 2 * t * psi.value(t))
    assert laplacian(linear_function(psi), Configuration([0.5]), grid, ramp) == pytest.approx(ref, abs=1e-6)
