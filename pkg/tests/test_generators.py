import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from gamma_fdcalc import (
    Configuration,
    FunctionOnConfigs,
    JumpRate,
    PolynomialRate,
    TensorPower,
    jump_closed,
    jump_direct,
    l_minus_closed,
    l_minus_direct,
    l_plus_closed,
    l_plus_direct,
    linear_function,
    pairing_function,
)
from gamma_fdcalc.errors import ArityMismatch
from gamma_fdcalc.generators import (
    HKernel,
    PKernel,
    h0_first_order,
    h1_first_order,
    p0_first_order,
    p1_first_order,
    translation_invariant_kernel,
)
from gamma_fdcalc.kernels import MultiBump, ScalarField, SymmetrizedFunction, Window, polynomial_bump, probe_tuples

UNIT = Window.cube(0, 1)
configs = st.lists(st.floats(0.0, 1.0), max_size=6, unique=True).map(Configuration)


@pytest.fixture
def rate_kernel():
    return SymmetrizedFunction(lambda X: 0.6 * np.exp(-((X[:, 0, 0] - X[:, 1, 0]) ** 2)), 2, UNIT, "0.6e^-(x-y)^2")


def quad(f):
    return sp_integrate.quad(f, 0, 1, limit=200, points=[0.05, 0.2, 0.5, 0.9, 0.95])[0]


def test_death_hand_example(identity_field):
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0, 4), "1", 1.0)
    rate = PolynomialRate(1, TensorPower(one, 2))
    g = Configuration([1.0, 2.0])
    F = linear_function(identity_field)
    assert l_minus_direct(rate, F, g) == -3.0
    assert l_minus_closed(rate, TensorPower(identity_field, 1), g) == -3.0
    assert l_minus_direct(rate, F, Configuration([])) == 0.0


def test_death_order_zero(psi, xi):
    rate = PolynomialRate(0, TensorPower(psi, 2))
    f = MultiBump([psi, xi])
    g = Configuration([0.2, 0.5, 0.7])
    F = pairing_function(f)
    assert l_minus_direct(rate, F, g) == pytest.approx(-2 * F(g), rel=1e-13)
    assert l_minus_closed(rate, f, g) == pytest.approx(-2 * F(g), rel=1e-13)


def test_birth_examples(psi, rate_kernel, grid):
    g = Configuration([0.4])
    F = linear_function(psi)
    assert l_plus_direct(PolynomialRate(1, rate_kernel), FunctionOnConfigs.constant(1.0), g, grid) == 0.0
    assert l_plus_direct(PolynomialRate(0, rate_kernel), F, g, grid) == pytest.approx(quad(psi.value), abs=1e-6)
    ref = quad(lambda t: 0.6 * np.exp(-((t - 0.4) ** 2)) * psi.value(t))
    assert l_plus_direct(PolynomialRate(1, rate_kernel), F, g, grid) == pytest.approx(ref, abs=1e-5)


@given(st.integers(0, 2), st.integers(1, 2), configs)
def test_death_closed_equals_direct(psi, xi, rate_kernel, m, n, g):
    rate = PolynomialRate(m, rate_kernel)
    f = MultiBump([psi, xi][:n])
    assert l_minus_closed(rate, f, g) == pytest.approx(l_minus_direct(rate, pairing_function(f), g), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2), st.integers(1, 2), configs.filter(lambda g: len(g) <= 5))
def test_birth_closed_equals_direct(psi, xi, rate_kernel, grid, m, n, g):
    rate = PolynomialRate(m, rate_kernel)
    f = MultiBump([psi, xi][:n])
    direct = l_plus_direct(rate, pairing_function(f), g, grid)
    assert l_plus_closed(rate, f, g, grid) == pytest.approx(direct, rel=1e-9, abs=1e-5)


def test_boundary_case_m_equals_n(psi, xi, rate_kernel):
    rate = PolynomialRate(2, rate_kernel)
    f = MultiBump([psi, xi])
    for pts in ([], [0.3], [0.3, 0.6], [0.1, 0.3, 0.6, 0.8]):
        g = Configuration(pts)
        assert l_minus_closed(rate, f, g) == pytest.approx(l_minus_direct(rate, pairing_function(f), g), rel=1e-12, abs=1e-14)


def test_generators_annihilate_constants(rate_kernel, grid):
    c = FunctionOnConfigs.constant(1.7)
    g = Configuration([0.2, 0.6])
    for m in (0, 1, 2):
        assert l_minus_direct(PolynomialRate(m, rate_kernel), c, g) == 0.0
        assert l_plus_direct(PolynomialRate(m, rate_kernel), c, g, grid) == 0.0
    assert jump_direct(JumpRate(rate_kernel), c, g, grid) == 0.0


def test_first_order_kernels_match(psi, xi, eta, rate_kernel):
    rate = PolynomialRate(1, rate_kernel)
    f = MultiBump([psi, xi])
    # h0 carries one extra argument, h1 none; p1 integrates against n-1 points, p0 against n
    P2, P3 = probe_tuples(UNIT, 2, 30), probe_tuples(UNIT, 3, 30)
    assert np.allclose(h0_first_order(rate_kernel, f).batch(P3), HKernel(rate, f, 1).batch(P3), rtol=1e-12, atol=1e-15)
    assert np.allclose(h1_first_order(rate_kernel, f).batch(P2), HKernel(rate, f, 0).batch(P2), rtol=1e-12, atol=1e-15)
    x = probe_tuples(UNIT, 1, 30)[:, 0]
    Y1, Y2 = probe_tuples(UNIT, 1, 30), probe_tuples(UNIT, 2, 30)
    assert np.allclose(p1_first_order(rate_kernel, f).values(x, Y1), PKernel(rate, f, 0).values(x, Y1), rtol=1e-12, atol=1e-15)
    assert np.allclose(p0_first_order(rate_kernel, f).values(x, Y2), PKernel(rate, f, 1).values(x, Y2), rtol=1e-12, atol=1e-15)


def test_jump_linear_example(psi, rate_kernel, grid):
    g = Configuration([0.3, 0.7])
    ref = sum(quad(lambda y: 0.6 * np.exp(-((x - y) ** 2)) * (psi.value(y) - psi.value(x))) for x in (0.3, 0.7))
    assert jump_direct(JumpRate(rate_kernel), linear_function(psi), g, grid) == pytest.approx(ref, abs=1e-5)
    assert jump_closed(JumpRate(rate_kernel), TensorPower(psi, 1), g, grid) == pytest.approx(ref, abs=1e-5)
    assert jump_closed(JumpRate(rate_kernel), TensorPower(psi, 1), Configuration([]), grid) == 0.0


@given(configs.filter(lambda g: len(g) <= 4))
def test_jump_closed_equals_direct(psi, xi, rate_kernel, grid, g):
    f = MultiBump([psi, xi])
    direct = jump_direct(JumpRate(rate_kernel), pairing_function(f), g, grid)
    assert jump_closed(JumpRate(rate_kernel), f, g, grid) == pytest.approx(direct, rel=1e-9, abs=1e-10)


def test_translation_invariant_rate(psi, grid):
    a = translation_invariant_kernel(polynomial_bump(0.0, 1.0, 0.5), UNIT)
    assert a(0.2, 0.5) == pytest.approx(0.5 * (1 - 0.09), rel=1e-14)
    g = Configuration([0.4])
    assert jump_closed(JumpRate(a), TensorPower(psi, 1), g, grid) == pytest.approx(
        jump_direct(JumpRate(a), linear_function(psi), g, grid), rel=1e-10
    )


def test_rate_requires_pair_kernel(psi):
    with pytest.raises(ArityMismatch):
        PolynomialRate(1, TensorPower(psi, 3))
    with pytest.raises(ArityMismatch):
        JumpRate(TensorPower(psi, 1))
