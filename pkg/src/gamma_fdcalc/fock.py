"""Finite Fock vectors of symmetric kernels and the operators acting on them.

A :class:`FockVector` ``(f0, f1, ..., fN)`` defines two functions on
configurations:

* the K-transform ``Kf(gamma) = sum_n <(gamma)_n, f_n> / n!``, multiplicative
  for the ⋆-product;
* the polynomial ``I^{-1} f(gamma) = f0 + sum_n <(gamma)_n, f_n>``, under which
  creation, annihilation and neutral operators become
  ``<., psi> + D-_psi``, ``D+_psi`` and ``-D-_psi``.
"""

from __future__ import annotations

import math
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .configspace import Configuration, Window, hull_of
from .diffgeo import FunctionOnConfigs, d_minus_directional, d_plus_directional, linear_function
from .errors import ArityMismatch, TruncationError
from .factorial import falling_pair, falling_pair_stack
from .kernels import (
    Constant,
    Diagonal,
    IntegrateFirstVariable,
    PointwiseMultiply,
    QuadratureGrid,
    ScalarField,
    SubsetSymmetricMultiplier,
    SumOverVariables,
    SymmetricKernel,
    SymTensorProduct,
    TensorPower,
    ZeroKernel,
    integrate,
    kernel_distance,
)

MAX_DEGREE = 6


class FockVector:
    """Finite sequence ``(f0, f1, ..., fN)``: a real ``f0`` and kernels ``fn`` of degree ``n``.

    ``None`` or ``0`` entries stand for zero kernels; a scalar field in slot 1
    is lifted to a degree-1 kernel.
    """

    def __init__(self, components: Sequence, dim: int | None = None):
        comps = list(components) or [0.0]
        if len(comps) - 1 > MAX_DEGREE:
            raise TruncationError(f"Fock vectors are truncated at degree {MAX_DEGREE}")
        if dim is None:
            dim = next((c.dim for c in comps[1:] if isinstance(c, (SymmetricKernel, ScalarField))), 1)
        self.dim = int(dim)
        c0 = comps[0]
        self.scalar = c0.constant_value() if isinstance(c0, SymmetricKernel) else float(c0)
        kernels = []
        for n, k in enumerate(comps[1:], 1):
            if k is None or (not isinstance(k, (SymmetricKernel, ScalarField)) and float(k) == 0.0):
                k = ZeroKernel(n, self.dim)
            elif isinstance(k, ScalarField):
                if n != 1:
                    raise ArityMismatch(f"a scalar field cannot be component {n}")
                k = TensorPower(k, 1)
            if k.degree != n:
                raise ArityMismatch(f"component {n} has degree {k.degree}")
            kernels.append(k)
        while kernels and kernels[-1].is_zero:
            kernels.pop()
        self.kernels = tuple(kernels)

    @classmethod
    def vacuum(cls, c: float = 1.0, dim: int = 1) -> "FockVector":
        return cls([c], dim)

    @classmethod
    def single(cls, k: SymmetricKernel) -> "FockVector":
        """Vector whose only nonzero component is ``k`` (at index ``k.degree``)."""
        if k.degree == 0:
            return cls([k.constant_value()], k.dim)
        return cls([0.0] + [None] * (k.degree - 1) + [k], k.dim)

    @property
    def degree(self) -> int:
        return len(self.kernels)

    def __len__(self) -> int:
        return self.degree + 1

    def __getitem__(self, n: int):
        return self.scalar if n == 0 else self.component(n)

    def component(self, n: int) -> SymmetricKernel:
        if n == 0:
            return Constant(self.scalar, self.dim) if self.scalar != 0.0 else ZeroKernel(0, self.dim)
        if n > self.degree:
            return ZeroKernel(n, self.dim)
        return self.kernels[n - 1]

    def nonzero(self) -> Iterable[tuple[int, SymmetricKernel]]:
        for n, k in enumerate(self.kernels, 1):
            if not k.is_zero:
                yield n, k

    @property
    def support(self) -> Window | None:
        return hull_of(k.support for _, k in self.nonzero())

    def __add__(self, other: "FockVector") -> "FockVector":
        N = max(self.degree, other.degree)
        comps = [self.scalar + other.scalar]
        for n in range(1, N + 1):
            a, b = self.component(n), other.component(n)
            comps.append(b if a.is_zero else a if b.is_zero else a + b)
        return FockVector(comps, self.dim)

    def __mul__(self, c: float) -> "FockVector":
        c = float(c)
        return FockVector([c * self.scalar] + [k if k.is_zero else c * k for k in self.kernels], self.dim)

    __rmul__ = __mul__

    def __neg__(self) -> "FockVector":
        return self * -1.0

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-other)

    def __repr__(self) -> str:
        return f"FockVector({[self.scalar] + [k.label for k in self.kernels]})"


class NewtonPolynomial(FunctionOnConfigs):
    """Function on configurations ``f0 + sum_n w_n <(gamma)_n, f_n>`` from a :class:`FockVector`.

    ``factorial_weights=True`` uses ``w_n = 1/n!`` (the K-transform);
    ``False`` uses ``w_n = 1`` (the inverse of the map ``I``).
    """

    def __init__(self, vector: FockVector, factorial_weights: bool = True):
        self.vector = vector
        self.factorial_weights = bool(factorial_weights)
        terms = [(1.0 / math.factorial(n) if factorial_weights else 1.0, k) for n, k in vector.nonzero()]

        def stack(G):
            out = np.full(G.shape[0], vector.scalar)
            for w, k in terms:
                out = out + w * falling_pair_stack(G, k)
            return out

        super().__init__(stack, vector.dim, vector.support, ("K" if factorial_weights else "I⁻¹") + repr(vector))


def k_transform(f: FockVector) -> NewtonPolynomial:
    """``Kf(gamma) = sum_n <(gamma)_n, f_n> / n!``."""
    return NewtonPolynomial(f, True)


def i_inverse(f: FockVector) -> NewtonPolynomial:
    """Polynomial ``f0 + sum_n <(gamma)_n, f_n>`` with coefficient vector ``f``."""
    return NewtonPolynomial(f, False)


def i_map(p: NewtonPolynomial) -> FockVector:
    """Coefficient vector of ``p`` in the falling-factorial basis without ``1/n!`` weights."""
    if not p.factorial_weights:
        return p.vector
    v = p.vector
    return FockVector([v.scalar] + [k if k.is_zero else (1.0 / math.factorial(n)) * k for n, k in enumerate(v.kernels, 1)], v.dim)


def monomial_polynomial(psi: ScalarField, power: int) -> NewtonPolynomial:
    """``<gamma, psi>^power`` for ``power <= 2``, via ``<gamma,psi>^2 = <(gamma)_2, psi⊗psi> + <gamma, psi^2>``."""
    if power == 0:
        return i_inverse(FockVector.vacuum(1.0, psi.dim))
    if power == 1:
        return i_inverse(FockVector([0.0, psi]))
    if power == 2:
        pp = TensorPower(psi, 2)
        return i_inverse(FockVector([0.0, Diagonal(pp), pp]))
    raise ValueError("monomials are converted up to degree 2 only")


# ----------------------------------------------------------------------------
# operators


def _max_degree_check(n: int) -> None:
    if n > MAX_DEGREE:
        raise TruncationError(f"result would have degree {n} > {MAX_DEGREE}")


_KEY_PROBES = np.linspace(0.123, 0.877, 5)


def _field_key(psi: ScalarField) -> tuple:
    """Deterministic ordering key for one-point factors."""
    probes = psi.support.lo[0] + (psi.support.hi[0] - psi.support.lo[0]) * _KEY_PROBES
    X = np.zeros((probes.size, psi.dim))
    X[:, 0] = probes
    for j in range(1, psi.dim):
        X[:, j] = 0.5 * (psi.support.lo[j] + psi.support.hi[j])
    return (psi.label, tuple(psi(X).tolist()))


def _create(psi: ScalarField, base_fields: list, base: SymmetricKernel) -> SymmetricKernel:
    """``psi_1 ⊙ (psi_2 ⊙ (... ⊙ base))`` with the factors in canonical order.

    Repeated creation therefore builds the same tree whatever the order of
    application, so ``[A+(psi), A+(xi)] = 0`` holds exactly in floating point.
    """
    fields = sorted(base_fields + [psi], key=_field_key)
    out = base
    for h in reversed(fields):
        out = SymTensorProduct(TensorPower(h, 1), out)
    out._created = (fields, base)
    return out


def _neutral(psi: ScalarField, k: SymmetricKernel) -> SymmetricKernel:
    """``(psi(x_1) + ... + psi(x_n)) k`` with stacked multipliers in canonical order."""
    fields, base = getattr(k, "_neutral", ([], k))
    fields = sorted(fields + [psi], key=_field_key)
    out = base
    for h in reversed(fields):
        out = SumOverVariables(h, out)
    out._neutral = (fields, base)
    return out


def a_plus(psi: ScalarField, f: FockVector) -> FockVector:
    """Creation: ``f_n -> psi ⊙ f_n``, shifting degrees up by one."""
    _max_degree_check(f.degree + 1)
    comps: list = [0.0]
    for n in range(f.degree + 1):
        k = f.component(n)
        if n == 0:
            comps.append(None if f.scalar == 0.0 else _create(psi, [], Constant(f.scalar, f.dim)))
        else:
            fields, base = getattr(k, "_created", ([], k))
            comps.append(None if k.is_zero else _create(psi, fields, base))
    return FockVector(comps, f.dim)


def a_minus(psi: ScalarField, f: FockVector, grid: QuadratureGrid) -> FockVector:
    """Annihilation: ``f_n -> n ∫ psi(x) f_n(x, .) dx``; the vacuum is annihilated."""
    comps: list = [0.0] + [None] * max(0, f.degree - 1)
    for n, k in f.nonzero():
        m = float(n) * IntegrateFirstVariable(psi, k, grid)
        comps[n - 1] = m.constant_value() if n == 1 else m
    return FockVector(comps, f.dim)


def a_zero(psi: ScalarField, f: FockVector) -> FockVector:
    """Neutral operator: multiplication by ``psi(x_1) + ... + psi(x_n)``."""
    return FockVector([0.0] + [k if k.is_zero else _neutral(psi, k) for k in f.kernels], f.dim)


def b_operator(psi: ScalarField, i: int, f: SymmetricKernel) -> SymmetricKernel:
    """Multiplication by the sum of ``psi^{⊗i}(x_I)`` over ``i``-subsets ``I``; ``B_0`` is the identity."""
    return SubsetSymmetricMultiplier(psi, i, f)


def product_formula_check(f: SymmetricKernel, psi: ScalarField, m: int, gamma: Configuration) -> tuple[float, float]:
    """``<(gamma)_n, f><(gamma)_m, psi^{⊗m}>`` against ``sum_k m!/k! <(gamma)_{n+k}, (B_{m-k} f) ⊙ psi^{⊗k}>``."""
    n = f.degree
    lhs = falling_pair(gamma, f) * falling_pair(gamma, TensorPower(psi, m))
    rhs = 0.0
    for k in range(max(m - n, 0), m + 1):
        term = SymTensorProduct(b_operator(psi, m - k, f), TensorPower(psi, k))
        rhs += math.factorial(m) / math.factorial(k) * falling_pair(gamma, term)
    return lhs, rhs


# ----------------------------------------------------------------------------
# ⋆-product


class StarComponent(SymmetricKernel):
    """Component ``j`` of ``f ⋆ g``, evaluated over all ordered 3-partitions of the arguments."""

    def __init__(self, f: FockVector, g: FockVector, j: int):
        super().__init__(j, f.dim, hull_of([f.support, g.support]), f"(f⋆g)_{j}")
        self.f, self.g = f, g
        terms = []
        for labels in product((0, 1, 2), repeat=j):
            left = [t for t, c in enumerate(labels) if c != 2]  # J1 ∪ J2
            right = [t for t, c in enumerate(labels) if c != 0]  # J2 ∪ J3
            a, b = f.component(len(left)), g.component(len(right))
            if a.is_zero or b.is_zero:
                continue
            terms.append((left, right, a, b))
        self._terms = terms

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def _eval(self, X):
        out = np.zeros(X.shape[0])
        for left, right, a, b in self._terms:
            out = out + a._call(X[:, left]) * b._call(X[:, right])
        return out


def star_product(f: FockVector, g: FockVector) -> FockVector:
    """``f ⋆ g``; components are evaluated lazily."""
    N = f.degree + g.degree
    _max_degree_check(N)
    return FockVector([f.scalar * g.scalar] + [StarComponent(f, g, j) for j in range(1, N + 1)], f.dim)


# ----------------------------------------------------------------------------
# inner products and comparisons


def fock_inner(f: FockVector, g: FockVector, grid: QuadratureGrid) -> float:
    """``f0 g0 + sum_n n! ∫ f_n g_n``, integrals by quadrature."""
    out = f.scalar * g.scalar
    for n in range(1, min(f.degree, g.degree) + 1):
        a, b = f.component(n), g.component(n)
        if a.is_zero or b.is_zero:
            continue
        out += math.factorial(n) * integrate(PointwiseMultiply(a, b), grid)
    return out


def fock_norm(f: FockVector, grid: QuadratureGrid) -> float:
    return math.sqrt(max(fock_inner(f, f, grid), 0.0))


def fock_distance(u: FockVector, v: FockVector, window: Window, count: int = 24, seed: int = 12345) -> float:
    """Max absolute componentwise difference on probe tuples."""
    out = abs(u.scalar - v.scalar)
    for n in range(1, max(u.degree, v.degree) + 1):
        a, b = u.component(n), v.component(n)
        if a.is_zero and b.is_zero:
            continue
        out = max(out, kernel_distance(a, b, window, count, seed))
    return out


def ccr_check(psi: ScalarField, xi: ScalarField, f: FockVector, grid: QuadratureGrid, count: int = 24) -> dict[str, float]:
    """Probe residuals of the six canonical commutation relations applied to ``f``."""
    w = grid.window
    dist = lambda u, v: fock_distance(u, v, w, count)  # noqa: E731
    Ap = lambda h, v: a_plus(h, v)  # noqa: E731
    Am = lambda h, v: a_minus(h, v, grid)  # noqa: E731
    A0 = a_zero
    pxi = psi * xi
    return {
        "[A+,A+]": dist(Ap(psi, Ap(xi, f)), Ap(xi, Ap(psi, f))),
        "[A-,A-]": dist(Am(psi, Am(xi, f)), Am(xi, Am(psi, f))),
        "[A0,A0]": dist(A0(psi, A0(xi, f)), A0(xi, A0(psi, f))),
        "[A-,A+]": dist(Am(psi, Ap(xi, f)) - Ap(xi, Am(psi, f)), integrate(pxi, grid) * f),
        "[A+,A0]": dist(Ap(psi, A0(xi, f)) - A0(xi, Ap(psi, f)), -Ap(pxi, f)),
        "[A-,A0]": dist(Am(psi, A0(xi, f)) - A0(xi, Am(psi, f)), Am(pxi, f)),
    }


def intertwining_check(
    psi: ScalarField, f: FockVector, gammas: Sequence[Configuration], grid: QuadratureGrid
) -> dict[str, float]:
    """Max residuals of the three operator identities under ``I^{-1}`` over the given configurations."""
    p = i_inverse(f)
    up, down, neutral = i_inverse(a_plus(psi, f)), i_inverse(a_minus(psi, f, grid)), i_inverse(a_zero(psi, f))
    lin = linear_function(psi)
    res = {"A+": 0.0, "A-": 0.0, "A0": 0.0}
    for g in gammas:
        dm = d_minus_directional(p, g, psi)
        res["A+"] = max(res["A+"], abs(up(g) - (lin(g) * p(g) + dm)))
        res["A-"] = max(res["A-"], abs(down(g) - d_plus_directional(p, g, psi, grid)))
        res["A0"] = max(res["A0"], abs(neutral(g) + dm))
    return res
