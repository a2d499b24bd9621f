import math

import numpy as np
import pytest

from gamma_fdcalc import (
    FunctionOnConfigs,
    PoissonSampler,
    TensorPower,
    VectorField,
    Window,
    duality_check,
    integrate,
    laplace_check,
    linear_function,
    mc_expectation,
    mecke_check,
    moment_check,
)
from gamma_fdcalc.kernels import ZeroKernel
from gamma_fdcalc.verify import make_report

UNIT = Window.cube(0, 1)


def count():
    return FunctionOnConfigs(lambda G: np.full(G.shape[0], float(G.shape[1])), 1, None, "|γ|")


def test_expectation_of_one():
    assert mc_expectation(FunctionOnConfigs.constant(1.0), PoissonSampler(UNIT, 3.0, seed=1), 1000) == (1.0, 0.0)


def test_expectation_of_count():
    z, n = 3.0, 50_000
    mean, se = mc_expectation(count(), PoissonSampler(UNIT, z, seed=2), n)
    assert se == pytest.approx(math.sqrt(z / n), rel=0.05)
    assert abs(mean - z) <= 4 * se


def test_expectation_of_linear(psi, grid):
    z = 2.0
    mean, se = mc_expectation(linear_function(psi), PoissonSampler(UNIT, z, seed=3), 50_000)
    assert abs(mean - z * integrate(psi, grid)) <= 4 * se


def test_stderr_scaling():
    s = PoissonSampler(UNIT, 4.0, seed=4)
    _, se1 = mc_expectation(count(), s, 20_000)
    _, se2 = mc_expectation(count(), s, 40_000)
    assert se1 / se2 == pytest.approx(math.sqrt(2), rel=0.2)


def test_mecke_campbell(psi, grid):
    z = 3.0
    r = mecke_check(lambda X, G: psi(X), PoissonSampler(UNIT, z, seed=5), grid, 40_000, support=psi.support)
    assert r.passed and abs(r.z_score) <= 4
    assert r.reference == pytest.approx(z * integrate(psi, grid), rel=0.02)


def test_mecke_zero(grid):
    r = mecke_check(lambda X, G: np.zeros(X.shape[0]), PoissonSampler(UNIT, 3.0, seed=6), grid, 1000, support=UNIT)
    assert r.estimate == 0.0 and r.reference == 0.0 and r.z_score == 0.0 and r.passed


def test_moment_zero_kernel(grid):
    r = moment_check(ZeroKernel(2), PoissonSampler(UNIT, 3.0, seed=7), grid, 1000)
    assert r.estimate == 0.0 and r.reference == 0.0 and r.passed


def test_moment_two(psi, grid):
    z = 3.0
    r = moment_check(TensorPower(psi, 2), PoissonSampler(UNIT, z, seed=8), grid, 40_000)
    assert r.reference == pytest.approx((z * integrate(psi, grid)) ** 2, rel=1e-12)
    assert abs(r.z_score) <= 4


def test_moment_degree_limit(psi, grid):
    with pytest.raises(ValueError):
        moment_check(TensorPower(psi, 5), PoissonSampler(UNIT, 1.0, seed=0), grid, 10)


def test_duality_zero_field(psi, grid):
    r = duality_check(VectorField.zero(), linear_function(psi), PoissonSampler(UNIT, 3.0, seed=9), grid, 1000)
    assert r.estimate == 0.0 and r.reference == 0.0 and r.passed


def test_duality_bump_field(psi, xi, grid):
    # V = (psi, 0), F = <gamma, xi>: both sides equal z ∫ psi xi
    z = 3.0
    r = duality_check(VectorField.from_fields(psi, None), linear_function(xi), PoissonSampler(UNIT, z, seed=10), grid, 20_000)
    assert abs(r.z_score) <= 4
    assert r.estimate == pytest.approx(z * integrate(psi * xi, grid), rel=1e-12)


def test_laplace_transform(psi, grid):
    f = 0.5 * psi
    r = laplace_check(f, PoissonSampler(UNIT, 3.0, seed=11), grid, 40_000)
    assert abs(r.z_score) <= 4


def test_reports_are_deterministic(psi, grid, monkeypatch):
    def run():
        return mecke_check(lambda X, G: psi(X) * G.shape[1], PoissonSampler(UNIT, 3.0, seed=12), grid, 5000, support=psi.support)

    monkeypatch.setenv("GAMMA_FDCALC_THREADS", "1")
    a = run()
    monkeypatch.setenv("GAMMA_FDCALC_THREADS", "4")
    assert run() == a == run()


def test_make_report_edge_cases():
    assert make_report("x", 1.0, 0.0, 1.0, 10, 0).passed
    r = make_report("x", 2.0, 0.0, 1.0, 10, 0)
    assert not r.passed and r.z_score == math.inf
    one_sided = make_report("x", 0.5, 0.1, 1.0, 10, 0, alternative="less")
    assert one_sided.passed and one_sided.z_score == pytest.approx(-5.0)
    d = r.to_dict()
    assert d["pass"] is False and "passed" not in d
