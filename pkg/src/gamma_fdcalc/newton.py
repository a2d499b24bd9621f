"""Newton series on configurations: coefficient extraction and weighted L1 norms.

A Newton series ``F(gamma) = f0 + sum_n <(gamma)_n, f_n> / n!`` is stored by
its coefficient vector.  The ``N_q`` norm is
``|f0| + sum_n q^n / n! ∫ |f_n|``; under the Poisson measure of constant
intensity ``z <= q`` it dominates ``E|F|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .configspace import PoissonSampler, sample_many
from .diffgeo import FunctionOnConfigs
from .errors import DuplicateProbe, ParameterOrder, SupportExceedsWindow
from .factorial import subset_index
from .fock import FockVector, k_transform
from .kernels import QuadratureGrid, TabulatedKernel, integrate, probe_tuples


def newton_coefficients(F: FunctionOnConfigs, max_degree: int, probes) -> FockVector:
    """Iterated forward differences of ``F`` at the empty configuration, tabulated on ``probes``.

    ``f_n(x_T) = sum_{U ⊂ T} (-1)^{|T|-|U|} F(x_U)`` for every ``n``-subset ``T``
    of the probe points (no ``1/n!``: the series carries it).
    """
    P = np.asarray(probes, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, F.dim)
    if len({row.tobytes() for row in P}) != P.shape[0]:
        raise DuplicateProbe("probe points must be pairwise distinct")
    K = P.shape[0]
    N = min(int(max_degree), K)
    values: dict[tuple[int, ...], float] = {}
    for s in range(N + 1):
        idx = subset_index(K, s)
        vals = F.stack(P[idx])
        for row, v in zip(idx, vals):
            values[tuple(int(i) for i in row)] = float(v)
    comps: list = [values[()]]
    for n in range(1, N + 1):
        table = {}
        for T in combinations(range(K), n):
            acc = 0.0
            for s in range(n + 1):
                sign = -1.0 if (n - s) % 2 else 1.0
                for U in combinations(T, s):
                    acc += sign * values[U]
            table[TabulatedKernel.key(P[list(T)])] = acc
        comps.append(TabulatedKernel(table, n, F.dim, F.locality, f"Δ{n}"))
    return FockVector(comps, F.dim)


class NewtonSeries:
    """Finite Newton series with norm parameter ``q``.

    ``tail_bound`` is a caller-supplied bound of the ``N_q`` norm of the
    omitted tail (zero for a finite series).  Construction checks that every
    component has a declared compact support and is finite on probe tuples,
    which together make the ``N_q`` norm finite.
    """

    def __init__(self, coefficients: FockVector, q: float, tail_bound: float = 0.0):
        if not q > 0:
            raise ValueError("norm parameter q must be positive")
        if tail_bound < 0:
            raise ValueError("tail bound must be nonnegative")
        self.coefficients = coefficients
        self.q = float(q)
        self.tail_bound = float(tail_bound)
        if not math.isfinite(coefficients.scalar):
            raise ValueError("constant coefficient is not finite")
        for n, k in coefficients.nonzero():
            if k.support is None:
                raise SupportExceedsWindow(f"component {n} has no declared compact support")
            if not np.all(np.isfinite(k.batch(probe_tuples(k.support, n, 8)))):
                raise ValueError(f"component {n} is not finite on probe tuples")

    @property
    def function(self) -> FunctionOnConfigs:
        return k_transform(self.coefficients)

    def scaled(self, c: float) -> "NewtonSeries":
        return NewtonSeries(c * self.coefficients, self.q, abs(c) * self.tail_bound)

    def with_q(self, q: float) -> "NewtonSeries":
        return NewtonSeries(self.coefficients, q, self.tail_bound)


def nq_norm(s: NewtonSeries, grid: QuadratureGrid) -> float:
    """``|f0| + sum_n q^n / n! ∫ |f_n|`` (plus the declared tail bound)."""
    out = abs(s.coefficients.scalar)
    for n, k in s.coefficients.nonzero():
        out += s.q**n / math.factorial(n) * integrate(k, grid, absolute=True)
    return out + s.tail_bound


@dataclass(frozen=True)
class L1Bound:
    """Monte Carlo ``E|F|`` under the Poisson measure against the ``N_q`` norm."""

    mc_l1: float
    stderr: float
    nq: float
    z: float
    q: float
    samples: int
    seed: int

    @property
    def margin(self) -> float:
        """``nq - mc_l1``; negative values indicate a violation (up to noise)."""
        return self.nq - self.mc_l1

    @property
    def z_score(self) -> float:
        if self.stderr > 0:
            return (self.mc_l1 - self.nq) / self.stderr
        return 0.0 if self.mc_l1 == self.nq else math.copysign(math.inf, self.mc_l1 - self.nq)


def l1_bound_check(
    s: NewtonSeries, z: float, samples: int, seed: int, grid: QuadratureGrid, workers: int = 1
) -> L1Bound:
    """Sample ``E|F|`` under the Poisson measure of intensity ``z`` on ``grid.window``; requires ``z <= q``."""
    if z > s.q:
        raise ParameterOrder(f"intensity {z} exceeds norm parameter {s.q}")
    nq = nq_norm(s, grid)
    F = s.function
    sample = sample_many(PoissonSampler(grid.window, float(z), seed), samples, workers=workers)
    vals = np.abs(sample.map(F.stack))
    mean = float(np.mean(vals)) if vals.size else 0.0
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return L1Bound(mean, se, nq, float(z), s.q, int(samples), int(seed))
