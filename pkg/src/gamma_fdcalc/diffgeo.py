"""Birth and death differences, vector fields, divergence and the difference Laplacian.

Functions on configurations are evaluated on stacks ``G`` of shape
``(B, N, d)``: ``B`` configurations with ``N`` points each.  Stack evaluators
must not depend on the order of points within a row.

All integrals over space are taken against ``sigma(dx) = rho(x) dx`` where
``rho`` is the ``intensity`` argument (a constant or a scalar field; default
Lebesgue measure).  They are discretized on a :class:`QuadratureGrid`; a
node that coincides with a point of the configuration is moved half a mesh
cell toward the window center, keeping its weight.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .configspace import (
    Configuration,
    Window,
    add_point_stack,
    delete_each_stack,
    remove_point_stack,
)
from .errors import DuplicatePoint, SupportExceedsWindow
from .factorial import falling_pair_stack
from .kernels import CHUNK, QuadratureGrid, ScalarField, SymmetricKernel

StackFn = Callable[[np.ndarray], np.ndarray]
PairFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class FunctionOnConfigs:
    """Real function of a finite configuration.

    ``locality`` is a window ``L`` with ``F(gamma) = F(gamma ∩ L)``, or
    ``None`` if no such window is declared.
    """

    def __init__(self, stack_eval: StackFn, dim: int = 1, locality: Window | None = None, label: str = ""):
        self._stack_eval = stack_eval
        self.dim = int(dim)
        self.locality = locality
        self.label = label

    @classmethod
    def from_callable(
        cls, fn: Callable[[Configuration], float], dim: int = 1, locality: Window | None = None, label: str = ""
    ) -> "FunctionOnConfigs":
        """Wrap a scalar function of a :class:`Configuration` (evaluated row by row)."""

        def stack(G):
            return np.array([fn(Configuration(row, dim=G.shape[2])) for row in G], dtype=float)

        return cls(stack, dim, locality, label)

    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "FunctionOnConfigs":
        return cls(lambda G: np.full(G.shape[0], float(c)), dim, None, f"{c:g}")

    def stack(self, G: np.ndarray) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        if G.shape[0] == 0:
            return np.zeros(0)
        return np.asarray(self._stack_eval(G), dtype=float).reshape(G.shape[0])

    def __call__(self, gamma: Configuration) -> float:
        return float(self.stack(gamma.points[None])[0])

    def _combine(self, other, op, label) -> "FunctionOnConfigs":
        if isinstance(other, FunctionOnConfigs):
            loc = None if self.locality is None or other.locality is None else self.locality.hull(other.locality)
            return FunctionOnConfigs(lambda G: op(self.stack(G), other.stack(G)), self.dim, loc, label)
        c = float(other)
        return FunctionOnConfigs(lambda G: op(self.stack(G), c), self.dim, self.locality, label)

    def __add__(self, other) -> "FunctionOnConfigs":
        return self._combine(other, np.add, f"({self.label}+{getattr(other, 'label', other)})")

    __radd__ = __add__

    def __sub__(self, other) -> "FunctionOnConfigs":
        return self._combine(other, np.subtract, f"({self.label}-{getattr(other, 'label', other)})")

    def __mul__(self, other) -> "FunctionOnConfigs":
        return self._combine(other, np.multiply, f"({self.label}*{getattr(other, 'label', other)})")

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionOnConfigs":
        return self * -1.0

    def __repr__(self) -> str:
        return f"FunctionOnConfigs({self.label!r}, locality={self.locality})"


def pairing_function(k: SymmetricKernel, coef: float = 1.0) -> FunctionOnConfigs:
    """``gamma -> coef * <(gamma)_n, k>``."""
    return FunctionOnConfigs(
        lambda G: coef * falling_pair_stack(G, k), k.dim, k.support, f"{coef:g}<(γ)_{k.degree},{k.label}>"
    )


def linear_function(psi: ScalarField) -> FunctionOnConfigs:
    """``gamma -> <gamma, psi> = sum_{x in gamma} psi(x)``."""
    return FunctionOnConfigs(lambda G: psi(G).sum(axis=1), psi.dim, psi.support, f"<γ,{psi.label}>")


class VectorField:
    """Pair ``(V+, V-)`` of stack maps ``(G, X) -> (B,)``.

    ``vplus(G, X)`` is only queried with ``X[b]`` not in ``G[b]`` and
    ``vminus(G, X)`` only with ``X[b]`` in ``G[b]``.  Both vanish for ``x``
    outside ``support``.
    """

    def __init__(self, vplus: PairFn, vminus: PairFn, support: Window | None, dim: int = 1, label: str = ""):
        self.vplus, self.vminus = vplus, vminus
        self.support = support
        self.dim = int(dim)
        self.label = label

    @classmethod
    def from_fields(cls, plus: ScalarField | None, minus: ScalarField | None, dim: int = 1) -> "VectorField":
        """Configuration-independent field ``V±(gamma, x) = plus/minus(x)``."""
        def comp(f):
            return (lambda G, X: f(X)) if f is not None else (lambda G, X: np.zeros(X.shape[0]))

        support = plus.support if plus is not None else (minus.support if minus is not None else None)
        if plus is not None and minus is not None:
            support = plus.support.hull(minus.support)
        return cls(comp(plus), comp(minus), support, dim, "field")

    @classmethod
    def zero(cls, dim: int = 1) -> "VectorField":
        z = lambda G, X: np.zeros(X.shape[0])  # noqa: E731
        return cls(z, z, None, dim, "0")


def gradient(F: FunctionOnConfigs) -> VectorField:
    """Difference gradient ``DF = (D+F, D-F)``."""
    return VectorField(
        lambda G, X: F.stack(add_point_stack(G, X)) - F.stack(G),
        lambda G, X: F.stack(remove_point_stack(G, X)) - F.stack(G),
        F.locality,
        F.dim,
        f"D[{F.label}]",
    )


# ----------------------------------------------------------------------------
# helpers


def _check_covers(grid: QuadratureGrid, support: Window | None, what: str) -> None:
    if support is not None and not grid.window.contains_window(support):
        raise SupportExceedsWindow(f"{what} support {support} not inside quadrature window {grid.window}")


def _sigma_weights(grid: QuadratureGrid, intensity) -> np.ndarray:
    if intensity is None:
        return grid.weights
    if isinstance(intensity, ScalarField):
        return grid.weights * intensity(grid.nodes)
    return grid.weights * float(intensity)


def _active(grid: QuadratureGrid, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = w != 0.0
    return grid.nodes[keep], w[keep]


def _node_stack(G: np.ndarray, nodes: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Nodes broadcast per configuration ``(B, M, d)``, moved off colliding points."""
    B, N, d = G.shape
    X = np.broadcast_to(nodes, (B,) + nodes.shape).copy()
    if N:
        hit = np.any(np.all(G[:, None, :, :] == X[:, :, None, :], axis=-1), axis=-1)
        if np.any(hit):
            shift = np.where(nodes < grid.window.center, 0.5, -0.5) * grid.cell
            X[hit] += np.broadcast_to(shift, X.shape)[hit]
    return X


def _integrate_over_nodes(
    G: np.ndarray, nodes: np.ndarray, grid: QuadratureGrid, w: np.ndarray, integrand
) -> np.ndarray:
    """``sum_j w_j integrand(G, x_j)`` per configuration.

    ``integrand(GG, XX, rows)`` receives flattened configuration/node pairs
    together with the index of the source configuration of each pair.
    """
    B, N, d = G.shape
    M = nodes.shape[0]
    if B == 0 or M == 0:
        return np.zeros(B)
    step = max(1, CHUNK // (M * (N + 1)))
    out = np.empty(B)
    for s in range(0, B, step):
        b = min(step, B - s)
        X = _node_stack(G[s : s + b], nodes, grid)  # (b, M, d)
        rows = np.repeat(np.arange(s, s + b), M)
        vals = integrand(G[rows], X.reshape(b * M, d), rows).reshape(b, M)
        out[s : s + b] = vals @ w
    return out


def _sum_over_points(G: np.ndarray, term: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """``sum_{x in gamma} term(gamma \\ x, x, gamma)`` per configuration."""
    B, N, d = G.shape
    if N == 0 or B == 0:
        return np.zeros(B)
    R = delete_each_stack(G).reshape(B * N, N - 1, d)
    X = G.reshape(B * N, d)
    full = np.repeat(G, N, axis=0)
    return term(R, X, full).reshape(B, N).sum(axis=1)


def _single(gamma: Configuration) -> np.ndarray:
    return gamma.points[None]


# ----------------------------------------------------------------------------
# differences at a point


def d_plus(F: FunctionOnConfigs, gamma: Configuration, x) -> float:
    """``D+_x F(gamma) = F(gamma ∪ x) - F(gamma)``; ``x`` must be new."""
    return F(gamma.union(x)) - F(gamma)


def d_minus(F: FunctionOnConfigs, gamma: Configuration, x) -> float:
    """``D-_x F(gamma) = F(gamma \\ x) - F(gamma)``; ``x`` must be a point of ``gamma``."""
    return F(gamma.remove(x)) - F(gamma)


def d_plus_stack(F: FunctionOnConfigs, G: np.ndarray, X: np.ndarray) -> np.ndarray:
    if G.shape[1] and np.any(np.all(G == X[:, None, :], axis=-1)):
        raise DuplicatePoint("d_plus at a point already in the configuration")
    return F.stack(add_point_stack(G, X)) - F.stack(G)


def d_minus_stack(F: FunctionOnConfigs, G: np.ndarray, X: np.ndarray) -> np.ndarray:
    return F.stack(remove_point_stack(G, X)) - F.stack(G)


# ----------------------------------------------------------------------------
# directional derivatives


def d_minus_directional_stack(F: FunctionOnConfigs, G: np.ndarray, psi: ScalarField) -> np.ndarray:
    base = F.stack(G)
    B, N, _ = G.shape
    if N == 0:
        return np.zeros(B)
    base_rep = np.repeat(base, N)
    return _sum_over_points(G, lambda R, X, full: psi(X) * (F.stack(R) - base_rep))


def d_minus_directional(F: FunctionOnConfigs, gamma: Configuration, psi: ScalarField) -> float:
    """``D-_psi F(gamma) = sum_{x in gamma} psi(x) (F(gamma \\ x) - F(gamma))``."""
    return float(d_minus_directional_stack(F, _single(gamma), psi)[0])


def d_plus_directional_stack(
    F: FunctionOnConfigs, G: np.ndarray, psi: ScalarField, grid: QuadratureGrid, intensity=None
) -> np.ndarray:
    _check_covers(grid, psi.support, "direction")
    nodes, w = _active(grid, _sigma_weights(grid, intensity) * psi(grid.nodes))
    Fg = F.stack(G)
    return _integrate_over_nodes(
        G, nodes, grid, w, lambda GG, X, rows: F.stack(add_point_stack(GG, X)) - Fg[rows]
    )


def d_plus_directional(
    F: FunctionOnConfigs, gamma: Configuration, psi: ScalarField, grid: QuadratureGrid, intensity=None
) -> float:
    """``D+_psi F(gamma) = ∫ psi(x) (F(gamma ∪ x) - F(gamma)) sigma(dx)`` by quadrature."""
    return float(d_plus_directional_stack(F, _single(gamma), psi, grid, intensity)[0])


def directional_derivative_stack(
    F: FunctionOnConfigs, V: VectorField, G: np.ndarray, grid: QuadratureGrid, intensity=None
) -> np.ndarray:
    _check_covers(grid, V.support, "vector field")
    nodes, w = _active(grid, _sigma_weights(grid, intensity))
    Fg = F.stack(G)
    birth = _integrate_over_nodes(
        G, nodes, grid, w, lambda GG, X, rows: V.vplus(GG, X) * (F.stack(add_point_stack(GG, X)) - Fg[rows])
    )
    Fr = np.repeat(Fg, G.shape[1])
    death = _sum_over_points(G, lambda R, X, full: V.vminus(full, X) * (F.stack(R) - Fr))
    return birth + death


def directional_derivative(
    F: FunctionOnConfigs, V: VectorField, gamma: Configuration, grid: QuadratureGrid, intensity=None
) -> float:
    """``D_V F = ∫ V+(gamma,x) D+_x F sigma(dx) + sum_{x in gamma} V-(gamma,x) D-_x F``."""
    return float(directional_derivative_stack(F, V, _single(gamma), grid, intensity)[0])


# ----------------------------------------------------------------------------
# divergence and Laplacian


def divergence_stack(V: VectorField, G: np.ndarray, grid: QuadratureGrid, intensity=None) -> np.ndarray:
    _check_covers(grid, V.support, "vector field")
    nodes, w = _active(grid, _sigma_weights(grid, intensity))
    pts = _sum_over_points(G, lambda R, X, full: V.vplus(R, X) - V.vminus(full, X))
    vol = _integrate_over_nodes(
        G, nodes, grid, w, lambda GG, X, rows: V.vminus(add_point_stack(GG, X), X) - V.vplus(GG, X)
    )
    return pts + vol


def divergence(V: VectorField, gamma: Configuration, grid: QuadratureGrid, intensity=None) -> float:
    """``Div V(gamma) = sum_{x in gamma} (V+(gamma\\x, x) - V-(gamma, x)) + ∫ (V-(gamma∪x, x) - V+(gamma, x)) sigma(dx)``."""
    return float(divergence_stack(V, _single(gamma), grid, intensity)[0])


def symmetric_divergence_stack(V: VectorField, G: np.ndarray, grid: QuadratureGrid, intensity=None) -> np.ndarray:
    """Divergence of a field with ``V+(gamma, x) = -V-(gamma ∪ x, x)``, from ``V+`` alone."""
    _check_covers(grid, V.support, "vector field")
    nodes, w = _active(grid, _sigma_weights(grid, intensity))
    pts = _sum_over_points(G, lambda R, X, full: V.vplus(R, X))
    vol = _integrate_over_nodes(G, nodes, grid, w, lambda GG, X, rows: V.vplus(GG, X))
    return 2.0 * pts - 2.0 * vol


def laplacian_stack(F: FunctionOnConfigs, G: np.ndarray, grid: QuadratureGrid, intensity=None) -> np.ndarray:
    _check_covers(grid, F.locality, "function locality")
    nodes, w = _active(grid, _sigma_weights(grid, intensity))
    Fg = F.stack(G)
    Fr = np.repeat(Fg, G.shape[1])
    deaths = _sum_over_points(G, lambda R, X, full: F.stack(R) - Fr)
    births = _integrate_over_nodes(
        G, nodes, grid, w, lambda GG, X, rows: F.stack(add_point_stack(GG, X)) - Fg[rows]
    )
    return -2.0 * deaths - 2.0 * births


def laplacian(F: FunctionOnConfigs, gamma: Configuration, grid: QuadratureGrid, intensity=None) -> float:
    """``ΔF(gamma) = -2 sum_{x in gamma} (F(gamma\\x) - F(gamma)) - 2 ∫ (F(gamma∪x) - F(gamma)) sigma(dx)``."""
    return float(laplacian_stack(F, _single(gamma), grid, intensity)[0])
