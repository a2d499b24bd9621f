import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamma_fdcalc import (
    Configuration,
    TensorPower,
    WeightedConfiguration,
    chu_vandermonde_check,
    falling_pair,
    falling_pair_ordered,
    falling_pair_weighted,
    generating_function,
    one_point_reduction_check,
)
from gamma_fdcalc.errors import DomainError, OverlappingSupports
from gamma_fdcalc.factorial import (
    generating_series,
    scalar_backward_check,
    scalar_falling,
    scalar_generating_check,
    scalar_newton_check,
    weighted_tuples,
)
from gamma_fdcalc.kernels import Constant, MultiBump, ScalarField, Window


def test_pair_examples(identity_field):
    g = Configuration([1.0, 2.0])
    assert falling_pair(g, TensorPower(identity_field, 2)) == 4.0
    assert falling_pair(g, Constant(1.0)) == 1.0
    assert falling_pair(g, TensorPower(identity_field, 3)) == 0.0
    assert falling_pair(g, TensorPower(identity_field, 1)) == 3.0


def _enumerate(gamma, k):
    """Reference: explicit sum over injective tuples."""
    pts = [tuple(p) for p in gamma.points]
    return sum(k(*t) for t in itertools.permutations(pts, k.degree)) if k.degree else k.constant_value()


@given(st.integers(0, 8), st.integers(0, 4), st.integers(0, 1000))
def test_subset_equals_ordered(psi, xi, eta, N, n, seed):
    rng = np.random.default_rng(seed)
    g = Configuration(rng.random(N))
    k = MultiBump([psi, xi, eta, psi][:n]) if n else Constant(0.3)
    a, b = falling_pair(g, k), falling_pair_ordered(g, k)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-14)
    if N <= 5:
        assert a == pytest.approx(_enumerate(g, k), rel=1e-12, abs=1e-14)


def test_weighted_examples():
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0, 1), "1", 1.0)
    assert falling_pair_weighted(WeightedConfiguration([[0.5]], [2.0]), TensorPower(one, 2)) == 2.0
    assert falling_pair_weighted(WeightedConfiguration([[0.5]], [3.0]), TensorPower(one, 4)) == 0.0


@given(st.integers(0, 5), st.integers(0, 5))
def test_weighted_scalar_oracle(t, n):
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0, 1), "1", 1.0)
    k = TensorPower(one, n) if n else Constant(1.0)
    assert falling_pair_weighted(WeightedConfiguration([[0.5]], [float(t)]), k) == scalar_falling(t, n)


def test_weighted_tuples_recursion():
    idx, coef = weighted_tuples(np.array([2.0, 1.0]), 2)
    table = {tuple(r): c for r, c in zip(idx.tolist(), coef.tolist())}
    # (2δa + δb)_2 = 2δa⊗δa ... coefficients c_i (c_j - [i == j])
    assert table == {(0, 0): 2.0, (0, 1): 2.0, (1, 0): 2.0}


@given(st.lists(st.floats(0.0, 1.0), min_size=0, max_size=7, unique=True), st.integers(1, 4))
def test_unit_charges_match_configuration(pts, n):
    from gamma_fdcalc import cosine_bump

    g = Configuration(pts)
    k = TensorPower(cosine_bump(0.5, 0.5), n)
    assert falling_pair_weighted(WeightedConfiguration.from_configuration(g), k) == pytest.approx(falling_pair(g, k), rel=1e-12, abs=1e-14)


def test_vandermonde_examples(psi):
    k = TensorPower(psi, 2)
    lhs, rhs = chu_vandermonde_check(WeightedConfiguration([[0.3]], [1.0]), WeightedConfiguration([[0.6]], [1.0]), k)
    assert lhs == pytest.approx(rhs) and lhs == pytest.approx(2 * psi.value(0.3) * psi.value(0.6))
    empty = WeightedConfiguration(np.zeros((0, 1)), [])
    lhs, rhs = chu_vandermonde_check(WeightedConfiguration([[0.3], [0.5]], [1.5, -0.5]), empty, k)
    assert lhs == pytest.approx(rhs)
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0, 1), "1", 1.0)
    lhs, rhs = chu_vandermonde_check(WeightedConfiguration([[0.2]], [2.0]), WeightedConfiguration([[0.7]], [1.0]), TensorPower(one, 2))
    assert lhs == rhs == scalar_falling(3, 2) == 6.0


@given(st.integers(1, 4), st.integers(0, 10_000))
def test_vandermonde_random(psi, xi, eta, n, seed):
    rng = np.random.default_rng(seed)
    P = rng.random((5, 1))
    w1 = WeightedConfiguration(P[:2], rng.uniform(-2, 3, 2))
    w2 = WeightedConfiguration(P[2:], rng.uniform(-2, 3, 3))
    lhs, rhs = chu_vandermonde_check(w1, w2, MultiBump([psi, xi, eta, psi][:n]))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_vandermonde_overlap():
    with pytest.raises(OverlappingSupports):
        chu_vandermonde_check(WeightedConfiguration([[0.3]], [1.0]), WeightedConfiguration([[0.3]], [1.0]), Constant(1.0))


def test_generating_function_examples():
    xi = ScalarField(lambda X: np.where(X[..., 0] < 0.5, 0.5, -0.5), Window.cube(0, 1), "step", 0.5)
    assert generating_function(Configuration([]), xi) == 1.0
    assert generating_function(Configuration([0.2, 0.8]), xi) == 0.75
    bad = ScalarField(lambda X: np.full(X.shape[:-1], -1.0), Window.cube(0, 1), "-1", 1.0)
    with pytest.raises(DomainError):
        generating_function(Configuration([0.4]), bad)


@given(st.lists(st.floats(0.0, 1.0), max_size=7, unique=True))
def test_generating_series_terminates(xi, pts):
    g = Configuration(pts)
    partial = generating_series(g, xi, len(g) + 2)
    exact = generating_function(g, xi)
    assert partial[len(g)] == pytest.approx(exact, rel=1e-12)
    assert partial[-1] == partial[len(g)]


def test_one_point_examples(psi):
    g = Configuration([0.4])
    assert one_point_reduction_check(g, TensorPower(psi, 1)) == (psi.value(0.4), psi.value(0.4))
    lhs, rhs = one_point_reduction_check(Configuration([0.3, 0.6]), TensorPower(psi, 2))
    assert lhs == pytest.approx(rhs) and rhs == pytest.approx(2 * psi.value(0.3) * psi.value(0.6))


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_one_point_random(psi, xi, eta, N, seed):
    g = Configuration(np.random.default_rng(seed).random(N))
    lhs, rhs = one_point_reduction_check(g, MultiBump([psi, xi, eta]))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


def test_scalar_examples():
    assert scalar_falling(5, 3) == 60
    assert scalar_falling(2.5, 0) == 1
    lhs, rhs = scalar_generating_check(0.1, 2.5)
    assert abs(lhs - rhs) < 1e-12


@given(st.floats(-10, 10), st.integers(0, 8))
def test_scalar_differences(t, n):
    a, b = scalar_newton_check(t, n)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9 * max(1.0, abs(t)) ** n)
    a, b = scalar_backward_check(t, n)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9 * max(1.0, abs(t)) ** n)


def test_pairing_factorial_relation():
    # <(gamma)_n, 1> = N!/(N-n)!
    one = ScalarField(lambda X: np.ones(X.shape[:-1]), Window.cube(0, 1), "1", 1.0)
    g = Configuration(np.linspace(0.1, 0.9, 6))
    for n in range(7):
        k = TensorPower(one, n) if n else Constant(1.0)
        assert falling_pair(g, k) == math.perm(6, n)
