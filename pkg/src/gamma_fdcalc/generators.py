"""Death, birth and jump generators with polynomial rates.

The death/birth rate of order ``m`` with pair kernel ``a`` is
``c(x, gamma) = <(gamma)_m, a(x, .)^{⊗m}>``, i.e. ``m!`` times the
elementary symmetric sum of order ``m`` of ``a(x, y)`` over ``y`` in ``gamma``.
For ``F = <(gamma)_n, f>`` the generators are again finite sums of
falling-factorial pairings; the kernels ``h`` (death) and ``p`` (birth)
below give them explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .configspace import Configuration, Window, add_point_stack, delete_each_stack, hull_of
from .diffgeo import FunctionOnConfigs, _check_covers, _integrate_over_nodes, _sum_over_points
from .errors import ArityMismatch
from .factorial import falling_pair
from .kernels import (
    CHUNK,
    DifferenceKernel,
    QuadratureGrid,
    ScalarField,
    SymmetricKernel,
    _elementary,
)


def _pair_values(a: SymmetricKernel, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``a(x[b], Y[b, i])`` for ``x`` of shape ``(B, d)`` and ``Y`` of shape ``(B, q, d)``."""
    B, q, d = Y.shape
    if q == 0:
        return np.zeros((B, 0))
    P = np.empty((B, q, 2, d))
    P[:, :, 0, :] = x[:, None, :]
    P[:, :, 1, :] = Y
    return a._call(P.reshape(B * q, 2, d)).reshape(B, q)


@dataclass(frozen=True)
class PolynomialRate:
    """Rate ``c(x, gamma) = <(gamma)_m, alpha_x^{⊗m}>`` with ``alpha_x = a(x, .)``."""

    m: int
    a: SymmetricKernel

    def __post_init__(self):
        if self.a.degree != 2:
            raise ArityMismatch("the pair kernel must have degree 2")
        if self.m < 0:
            raise ValueError("rate order must be nonnegative")

    @property
    def dim(self) -> int:
        return self.a.dim

    def stack(self, G: np.ndarray, X: np.ndarray) -> np.ndarray:
        """``c(X[b], G[b])`` for a stack of configurations."""
        if self.m == 0:
            return np.ones(G.shape[0])
        return math.factorial(self.m) * _elementary(_pair_values(self.a, X, G), self.m)

    def __call__(self, x, gamma: Configuration) -> float:
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        return float(self.stack(gamma.points[None], x)[0])


@dataclass(frozen=True)
class JumpRate:
    """Jump rate ``a(x, y)`` from ``x`` to ``y``, independent of the configuration."""

    a: SymmetricKernel

    def __post_init__(self):
        if self.a.degree != 2:
            raise ArityMismatch("the jump kernel must have degree 2")

    @property
    def dim(self) -> int:
        return self.a.dim


def translation_invariant_kernel(profile: ScalarField, window: Window) -> DifferenceKernel:
    """``a(x, y) = profile(x - y)`` on ``window``; symmetric when ``profile`` is even."""
    return DifferenceKernel(profile, window)


# ----------------------------------------------------------------------------
# direct evaluation


def _rate_support(rate) -> Window | None:
    return rate.a.support


def l_minus_direct_stack(rate: PolynomialRate, F: FunctionOnConfigs, G: np.ndarray) -> np.ndarray:
    Fr = np.repeat(F.stack(G), G.shape[1])
    return _sum_over_points(G, lambda R, X, full: rate.stack(R, X) * (F.stack(R) - Fr))


def l_minus_direct(rate: PolynomialRate, F: FunctionOnConfigs, gamma: Configuration) -> float:
    """``sum_{x in gamma} c(x, gamma \\ x) (F(gamma \\ x) - F(gamma))``."""
    return float(l_minus_direct_stack(rate, F, gamma.points[None])[0])


def l_plus_direct_stack(rate: PolynomialRate, F: FunctionOnConfigs, G: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    _check_covers(grid, F.locality, "function locality")
    if rate.m:
        _check_covers(grid, _rate_support(rate), "rate")
    Fg = F.stack(G)
    return _integrate_over_nodes(
        G,
        grid.nodes,
        grid,
        grid.weights,
        lambda GG, X, rows: rate.stack(GG, X) * (F.stack(add_point_stack(GG, X)) - Fg[rows]),
    )


def l_plus_direct(rate: PolynomialRate, F: FunctionOnConfigs, gamma: Configuration, grid: QuadratureGrid) -> float:
    """``∫ c(x, gamma) (F(gamma ∪ x) - F(gamma)) dx`` by quadrature."""
    return float(l_plus_direct_stack(rate, F, gamma.points[None], grid)[0])


def jump_direct_stack(rate: JumpRate, F: FunctionOnConfigs, G: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Jump generator via ``F((gamma\\x) ∪ y) - F(gamma) = D+_y F(gamma \\ x) + D-_x F(gamma)``."""
    _check_covers(grid, _rate_support(rate), "jump kernel")
    _check_covers(grid, F.locality, "function locality")
    B, N, d = G.shape
    if B == 0 or N == 0:
        return np.zeros(B)
    R = delete_each_stack(G).reshape(B * N, N - 1, d)
    Xs = G.reshape(B * N, d)
    FR = F.stack(R)
    Fg = np.repeat(F.stack(G), N)
    birth = _integrate_over_nodes(
        R,
        grid.nodes,
        grid,
        grid.weights,
        lambda RR, Y, rows: rate.a._call(np.stack([Xs[rows], Y], axis=1)) * (F.stack(add_point_stack(RR, Y)) - FR[rows]),
    )
    out_rate = _total_rate(rate.a, Xs, grid)
    return (birth + out_rate * (FR - Fg)).reshape(B, N).sum(axis=1)


def _total_rate(a: SymmetricKernel, X: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """``∫ a(x, y) dy`` for each row ``x`` of ``X``."""
    M = len(grid)
    out = np.empty(X.shape[0])
    step = max(1, CHUNK // M)
    for s in range(0, X.shape[0], step):
        Xs = X[s : s + step]
        vals = _pair_values(a, Xs, np.broadcast_to(grid.nodes, (Xs.shape[0], M, grid.dim)))
        out[s : s + Xs.shape[0]] = vals @ grid.weights
    return out


def jump_direct(rate: JumpRate, F: FunctionOnConfigs, gamma: Configuration, grid: QuadratureGrid) -> float:
    """``sum_{x in gamma} ∫ a(x, y) (F((gamma \\ x) ∪ y) - F(gamma)) dy``."""
    return float(jump_direct_stack(rate, F, gamma.points[None], grid)[0])


# ----------------------------------------------------------------------------
# closed forms


def _coef(m: int, n: int, q: int) -> float:
    """``m! n! / q!`` computed exactly before conversion."""
    return float(Fraction(math.factorial(m) * math.factorial(n), math.factorial(q)))


def _k_range(m: int, n: int) -> range:
    return range(max(m - n + 1, 0), m + 1)


class HKernel(SymmetricKernel):
    """Death-generator kernel ``h_{m-k}^{(n+k)}``.

    ``-(m! n! / (n+k)!) sum_j sum_{I ⊂ A\\j, |I|=k} sum_{J ⊂ (A\\I)\\j, |J|=m-k}
    prod_{i in I ∪ J} a(x_j, x_i) f(x_{A\\I})``.
    """

    def __init__(self, rate: PolynomialRate, f: SymmetricKernel, k: int):
        n, m = f.degree, rate.m
        if n < 1:
            raise ArityMismatch("closed forms need a kernel of degree >= 1")
        super().__init__(n + k, f.dim, hull_of([f.support, rate.a.support]), f"h[{m - k},{n + k}]")
        self.rate, self.f, self.k = rate, f, k
        q = n + k
        self.coef = -_coef(m, n, q)
        A = range(q)
        self._terms = []  # (I, rest, [(j, J), ...])
        for I in combinations(A, k):
            rest = [i for i in A if i not in I]
            inner = [
                (j, list(I) + list(J))
                for j in rest
                for J in combinations([i for i in rest if i != j], m - k)
            ]
            if inner:
                self._terms.append((rest, inner))

    def _eval(self, X):
        B, q, d = X.shape
        Amat = _pair_values(self.rate.a, X.reshape(B * q, d), np.repeat(X, q, axis=0)).reshape(B, q, q)
        out = np.zeros(B)
        for rest, inner in self._terms:
            s = np.zeros(B)
            for j, idx in inner:
                s = s + np.prod(Amat[:, j, idx], axis=1)
            out = out + s * self.f._call(X[:, rest])
        return self.coef * out


class PKernel:
    """Birth-generator kernel ``p_{m-k}^{(n-1+k)}(x, x_{A'})`` before integration in ``x``.

    ``(m! n! / (n-1+k)!) sum_{I ⊂ A', |I|=k} sum_{J ⊂ A'\\I, |J|=m-k}
    prod_{i in I ∪ J} a(x, x_i) f(x, x_{A'\\I})``; symmetric in ``x_{A'}`` only.
    """

    def __init__(self, rate: PolynomialRate, f: SymmetricKernel, k: int):
        n, m = f.degree, rate.m
        if n < 1:
            raise ArityMismatch("closed forms need a kernel of degree >= 1")
        self.rate, self.f, self.k = rate, f, k
        self.degree = n - 1 + k
        self.coef = _coef(m, n, self.degree)
        self._terms = []
        for I in combinations(range(self.degree), k):
            rest = [i for i in range(self.degree) if i not in I]
            Js = [list(I) + list(J) for J in combinations(rest, m - k)]
            if Js:
                self._terms.append((rest, Js))

    def values(self, x: np.ndarray, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        Amat = _pair_values(self.rate.a, x, X)
        out = np.zeros(B)
        for rest, Js in self._terms:
            s = np.zeros(B)
            for idx in Js:
                s = s + np.prod(Amat[:, idx], axis=1)
            out = out + s * self.f._call(np.concatenate([x[:, None, :], X[:, rest]], axis=1))
        return self.coef * out


class XMarginal(SymmetricKernel):
    """``x_{A'} -> ∫ p(x, x_{A'}) dx`` on a quadrature grid for a kernel exposing ``values``."""

    def __init__(self, p, grid: QuadratureGrid, support: Window | None, label: str = "∫p"):
        super().__init__(p.degree, grid.dim, support, label)
        self.p, self.grid = p, grid

    def _eval(self, X):
        B, q, d = X.shape
        M = len(self.grid)
        step = max(1, CHUNK // (M * (q + 1)))
        out = np.empty(B)
        for s in range(0, B, step):
            Xs = X[s : s + step]
            b = Xs.shape[0]
            xs = np.broadcast_to(self.grid.nodes, (b, M, d)).reshape(b * M, d)
            XX = np.repeat(Xs, M, axis=0)
            out[s : s + b] = self.p.values(xs, XX).reshape(b, M) @ self.grid.weights
        return out


def h_kernels(rate: PolynomialRate, f: SymmetricKernel) -> list[HKernel]:
    return [HKernel(rate, f, k) for k in _k_range(rate.m, f.degree)]


def p_marginals(rate: PolynomialRate, f: SymmetricKernel, grid: QuadratureGrid) -> list[XMarginal]:
    _check_covers(grid, f.support, "kernel")
    support = hull_of([f.support, rate.a.support])
    return [XMarginal(PKernel(rate, f, k), grid, support, f"∫p[{rate.m - k}]") for k in _k_range(rate.m, f.degree)]


def l_minus_closed(rate: PolynomialRate, f: SymmetricKernel, gamma: Configuration) -> float:
    """Death generator on ``<(gamma)_n, f>`` as ``sum_k <(gamma)_{n+k}, h_{m-k}^{(n+k)}>``."""
    return float(sum(falling_pair(gamma, h) for h in h_kernels(rate, f)))


def l_plus_closed(rate: PolynomialRate, f: SymmetricKernel, gamma: Configuration, grid: QuadratureGrid) -> float:
    """Birth generator on ``<(gamma)_n, f>`` as ``sum_k <(gamma)_{n-1+k}, ∫ p_{m-k}(x, .) dx>``."""
    return float(sum(falling_pair(gamma, p) for p in p_marginals(rate, f, grid)))


# first-order rates written out explicitly


class _Formula(SymmetricKernel):
    def __init__(self, fn, degree: int, dim: int, support, label: str):
        super().__init__(degree, dim, support, label)
        self.fn = fn

    def _eval(self, X):
        return self.fn(X)


def _amat(a: SymmetricKernel, X: np.ndarray) -> np.ndarray:
    B, q, d = X.shape
    return _pair_values(a, X.reshape(B * q, d), np.repeat(X, q, axis=0)).reshape(B, q, q)


def h1_first_order(a: SymmetricKernel, f: SymmetricKernel) -> SymmetricKernel:
    """``-sum_j sum_{i != j} a(x_j, x_i) f(x_1..x_n)``."""
    n = f.degree

    def fn(X):
        Amat = _amat(a, X)
        off = Amat.sum(axis=(1, 2)) - np.einsum("bii->b", Amat)
        return -off * f._call(X)

    return _Formula(fn, n, f.dim, hull_of([f.support, a.support]), "h1")


def h0_first_order(a: SymmetricKernel, f: SymmetricKernel) -> SymmetricKernel:
    """``-(1/(n+1)) sum_j sum_{i != j} a(x_j, x_i) f(x_{A \\ i})``."""
    n = f.degree
    q = n + 1

    def fn(X):
        Amat = _amat(a, X)
        out = np.zeros(X.shape[0])
        for i in range(q):
            col = Amat[:, :, i].sum(axis=1) - Amat[:, i, i]
            out = out + col * f._call(X[:, [t for t in range(q) if t != i]])
        return -out / q

    return _Formula(fn, q, f.dim, hull_of([f.support, a.support]), "h0")


class _PointFormula:
    def __init__(self, fn, degree: int):
        self.fn, self.degree = fn, degree

    def values(self, x, X):
        return self.fn(x, X)


def p1_first_order(a: SymmetricKernel, f: SymmetricKernel) -> _PointFormula:
    """``n sum_j a(x, x_j) f(x, x_1..x_{n-1})``."""
    n = f.degree

    def fn(x, X):
        return n * _pair_values(a, x, X).sum(axis=1) * f._call(np.concatenate([x[:, None, :], X], axis=1))

    return _PointFormula(fn, n - 1)


def p0_first_order(a: SymmetricKernel, f: SymmetricKernel) -> _PointFormula:
    """``sum_i a(x, x_i) f(x, x_{A' \\ i})``."""
    n = f.degree

    def fn(x, X):
        A = _pair_values(a, x, X)
        out = np.zeros(X.shape[0])
        for i in range(n):
            rest = [t for t in range(n) if t != i]
            out = out + A[:, i] * f._call(np.concatenate([x[:, None, :], X[:, rest]], axis=1))
        return out

    return _PointFormula(fn, n)


def first_order_marginal(point_kernel: _PointFormula, grid: QuadratureGrid, support) -> XMarginal:
    return XMarginal(point_kernel, grid, support)


# ----------------------------------------------------------------------------
# jump closed form


class GKernel(SymmetricKernel):
    """``g(x_1..x_n) = sum_i ∫ a(x_i, y) (f(y, x_{-i}) - f(x_1..x_n)) dy`` on a grid."""

    def __init__(self, rate: JumpRate, f: SymmetricKernel, grid: QuadratureGrid):
        if f.degree < 1:
            raise ArityMismatch("jump closed form needs a kernel of degree >= 1")
        _check_covers(grid, rate.a.support, "jump kernel")
        _check_covers(grid, f.support, "kernel")
        super().__init__(f.degree, f.dim, hull_of([f.support, rate.a.support]), "g")
        self.rate, self.f, self.grid = rate, f, grid

    def _eval(self, X):
        B, n, d = X.shape
        nodes, w = self.grid.nodes, self.grid.weights
        M = nodes.shape[0]
        fx = self.f._call(X)
        out = np.zeros(B)
        step = max(1, CHUNK // (M * n))
        for i in range(n):
            rest = [t for t in range(n) if t != i]
            total = _total_rate(self.rate.a, X[:, i], self.grid)
            moved = np.empty(B)
            for s in range(0, B, step):
                Xs = X[s : s + step]
                b = Xs.shape[0]
                A = _pair_values(self.rate.a, Xs[:, i], np.broadcast_to(nodes, (b, M, d)))
                Y = np.empty((b, M, n, d))
                Y[:, :, 0, :] = nodes[None]
                Y[:, :, 1:, :] = Xs[:, None, rest, :]
                fy = self.f._call(Y.reshape(b * M, n, d)).reshape(b, M)
                moved[s : s + b] = (A * fy) @ w
            out = out + moved - total * fx
        return out


def jump_closed(rate: JumpRate, f: SymmetricKernel, gamma: Configuration, grid: QuadratureGrid) -> float:
    """Jump generator on ``<(gamma)_n, f>`` as ``<(gamma)_n, g>``."""
    return falling_pair(gamma, GKernel(rate, f, grid))
