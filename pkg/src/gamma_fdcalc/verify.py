"""Monte Carlo verification of Poisson integral identities.

Each check draws one seed-pinned batch of Poisson configurations and
compares two estimators of the same quantity.  When both sides are computed
from the same configurations (Mecke, duality) the standard error is that of
the per-sample difference.  Statistical failures are reported through
:class:`EstimatorReport`, never raised.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .configspace import ConfigSample, PoissonSampler, add_point_stack, sample_many
from .diffgeo import (
    FunctionOnConfigs,
    VectorField,
    _check_covers,
    _integrate_over_nodes,
    directional_derivative_stack,
    divergence_stack,
)
from .factorial import falling_pair_stack
from .kernels import QuadratureGrid, ScalarField, SymmetricKernel, integrate

Z_THRESHOLD = 4.0
FLAKY_THRESHOLD = 3.0


def worker_count() -> int:
    """Worker threads for batch sampling, from ``GAMMA_FDCALC_THREADS`` (0 or unset: all CPUs)."""
    raw = os.environ.get("GAMMA_FDCALC_THREADS", "0").strip() or "0"
    n = int(raw)
    return max(1, os.cpu_count() or 1) if n <= 0 else n


@dataclass(frozen=True)
class EstimatorReport:
    """Outcome of one statistical comparison.

    ``alternative="less"`` tests the one-sided claim ``estimate <= reference``.
    """

    name: str
    estimate: float
    stderr: float
    reference: float
    z_score: float
    samples: int
    seed: int
    passed: bool
    alternative: str = "two-sided"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def make_report(
    name: str,
    estimate: float,
    stderr: float,
    reference: float,
    samples: int,
    seed: int,
    alternative: str = "two-sided",
    threshold: float = Z_THRESHOLD,
) -> EstimatorReport:
    diff = estimate - reference
    if stderr > 0:
        z = diff / stderr
    else:
        z = 0.0 if math.isclose(estimate, reference, rel_tol=1e-12, abs_tol=1e-15) else math.copysign(math.inf, diff)
    ok = z <= threshold if alternative == "less" else abs(z) <= threshold
    return EstimatorReport(name, float(estimate), float(stderr), float(reference), float(z), int(samples), int(seed), bool(ok), alternative)


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    if v.size == 0:
        return 0.0, 0.0
    if v.size == 1:
        return float(v[0]), 0.0
    return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))


def draw(sampler: PoissonSampler, samples: int) -> ConfigSample:
    return sample_many(sampler, samples, workers=worker_count())


def _sigma(sampler: PoissonSampler, grid: QuadratureGrid) -> np.ndarray:
    return grid.weights * sampler.density(grid.nodes)


def mc_expectation(F: FunctionOnConfigs, sampler: PoissonSampler, samples: int) -> tuple[float, float]:
    """Sample mean and standard error of ``F`` under the Poisson measure."""
    if samples < 2:
        raise ValueError("need at least two samples")
    return _mean_se(draw(sampler, samples).map(F.stack))


def _paired(name, a, b, samples, seed, alternative="two-sided") -> EstimatorReport:
    _, se = _mean_se(a - b)
    return make_report(name, float(np.mean(a)), se, float(np.mean(b)), samples, seed, alternative)


def mecke_check(
    Fxg: Callable[[np.ndarray, np.ndarray], np.ndarray],
    sampler: PoissonSampler,
    grid: QuadratureGrid,
    samples: int,
    support=None,
    name: str = "mecke",
) -> EstimatorReport:
    """``E sum_{x in gamma} F(x, gamma)`` against ``E ∫ F(x, gamma ∪ x) sigma(dx)``.

    ``Fxg(X, G)`` evaluates ``F(X[b], G[b])`` for points ``X`` of shape
    ``(B, d)`` and configurations ``G`` of shape ``(B, N, d)``; it must vanish
    for ``x`` outside ``support``.  The right side reuses every sampled
    configuration for its ``x``-quadrature.
    """
    support = getattr(Fxg, "support", None) if support is None else support
    _check_covers(grid, support, "x")
    sample = draw(sampler, samples)
    w = _sigma(sampler, grid)
    keep = w != 0.0
    nodes, w = grid.nodes[keep], w[keep]

    def lhs(G):
        B, N, d = G.shape
        if N == 0:
            return np.zeros(B)
        return Fxg(G.reshape(B * N, d), np.repeat(G, N, axis=0)).reshape(B, N).sum(axis=1)

    def rhs(G):
        return _integrate_over_nodes(G, nodes, grid, w, lambda GG, X, rows: Fxg(X, add_point_stack(GG, X)))

    return _paired(name, sample.map(lhs), sample.map(rhs), samples, sampler.seed)


def moment_check(
    k: SymmetricKernel, sampler: PoissonSampler, grid: QuadratureGrid, samples: int, name: str | None = None
) -> EstimatorReport:
    """``E <(gamma)_n, k>`` against ``∫ k sigma^{⊗n}`` (quadrature)."""
    if k.degree > 4:
        raise ValueError("moment checks are limited to degree 4")
    ref = integrate(k, grid, density=sampler.density)
    mean, se = _mean_se(draw(sampler, samples).map(lambda G: falling_pair_stack(G, k)))
    return make_report(name or f"moment-{k.degree}", mean, se, ref, samples, sampler.seed)


def duality_check(
    V: VectorField, F: FunctionOnConfigs, sampler: PoissonSampler, grid: QuadratureGrid, samples: int, name: str = "duality"
) -> EstimatorReport:
    """``E[D_V F]`` against ``E[(Div V) F]``, all space integrals against the sampler intensity.

    With ``Div V = sum_{x in gamma} (V+(gamma\\x, x) - V-(gamma, x)) + ∫ (V-(gamma∪x, x) - V+(gamma, x)) sigma(dx)``
    the Mecke identity gives ``E[D_V F] = +E[(Div V) F]``; e.g. ``V = (psi, 0)``,
    ``F = <gamma, xi>`` has both sides equal to ``∫ psi xi sigma``.
    """
    _check_covers(grid, F.locality, "function locality")
    sample = draw(sampler, samples)
    rho = _density_field(sampler)
    a = sample.map(lambda G: directional_derivative_stack(F, V, G, grid, rho))
    b = sample.map(lambda G: divergence_stack(V, G, grid, rho) * F.stack(G))
    return _paired(name, a, b, samples, sampler.seed)


def _density_field(sampler: PoissonSampler):
    if sampler.is_constant:
        return float(sampler.intensity)
    return sampler.intensity


def laplace_check(
    f: ScalarField, sampler: PoissonSampler, grid: QuadratureGrid, samples: int, name: str = "laplace"
) -> EstimatorReport:
    """``E exp(<gamma, f>)`` against ``exp(∫ (e^f - 1) sigma)``."""
    _check_covers(grid, f.support, "test function")
    g = ScalarField(lambda X: np.expm1(f(X)), f.support, f"expm1({f.label})")
    ref = math.exp(integrate(g, grid, density=sampler.density))
    mean, se = _mean_se(draw(sampler, samples).map(lambda G: np.exp(f(G).sum(axis=1))))
    return make_report(name, mean, se, ref, samples, sampler.seed)
