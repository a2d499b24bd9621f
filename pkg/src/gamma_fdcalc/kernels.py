"""Scalar test functions, symmetric kernels and tensor-product quadrature.

A :class:`SymmetricKernel` of degree ``n`` is evaluated on arrays of shape
``(B, n, d)``.  Every evaluation first puts the ``n`` arguments of each row in
lexicographic order, so kernel values are invariant under argument
permutations bit for bit, independently of how a particular node computes.
"""

from __future__ import annotations

import math
from itertools import combinations, permutations
from typing import Callable, Sequence

import numpy as np

from .configspace import Window, as_point, hull_of, sort_stack
from .errors import ArityMismatch, IndexOutOfRange, ProbeLookupError, SupportExceedsWindow

# rows per vectorized evaluation chunk
CHUNK = 1 << 16


# ----------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """Function ``R^d -> R`` with a declared compact support.

    The evaluator is wrapped so that values outside ``support`` are exactly
    zero.  ``bound`` is an optional upper bound of ``|f|``, required when the
    field is used as a Poisson intensity.
    """

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], np.ndarray],
        support: Window,
        label: str = "",
        bound: float | None = None,
    ):
        self.evaluator = evaluator
        self.support = support
        self.label = label
        self.bound = bound

    @property
    def dim(self) -> int:
        return self.support.dim

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1:] != (self.dim,):
            raise ValueError(f"{self.label or 'field'} expects points of dimension {self.dim}")
        inside = self.support.contains(X)
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(self.evaluator(X), dtype=float), inside.shape)
        return np.where(inside, vals, 0.0)

    def value(self, x) -> float:
        return float(self(as_point(x, self.dim)[None])[0])

    def __mul__(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            support = self.support.intersect(other.support) or self.support.hull(other.support)
            bound = None if self.bound is None or other.bound is None else self.bound * other.bound
            return ScalarField(lambda X: self(X) * other(X), support, f"({self.label}*{other.label})", bound)
        c = float(other)
        bound = None if self.bound is None else abs(c) * self.bound
        return ScalarField(lambda X: c * self(X), self.support, f"{c:g}*{self.label}", bound)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0

    def __add__(self, other: "ScalarField") -> "ScalarField":
        bound = None if self.bound is None or other.bound is None else self.bound + other.bound
        return ScalarField(
            lambda X: self(X) + other(X), self.support.hull(other.support), f"({self.label}+{other.label})", bound
        )

    def __repr__(self) -> str:
        return f"ScalarField({self.label!r}, support={self.support})"


def _radial(center, radius: float, dim: int | None):
    c = as_point(center, dim)
    r = float(radius)
    if not r > 0:
        raise ValueError("bump radius must be positive")
    support = Window(tuple(c - r), tuple(c + r))
    return c, r, support


def triangular_bump(center=0.0, radius: float = 1.0, height: float = 1.0, dim: int | None = None) -> ScalarField:
    """``height * max(0, 1 - |x - center| / radius)``; Lipschitz, kink at the center."""
    c, r, support = _radial(center, radius, dim)
    return ScalarField(
        lambda X: height * np.maximum(0.0, 1.0 - np.linalg.norm(X - c, axis=-1) / r),
        support,
        f"tri({c.tolist()},{r:g})",
        abs(height),
    )


def cosine_bump(center=0.0, radius: float = 1.0, height: float = 1.0, dim: int | None = None) -> ScalarField:
    """``height * (1 + cos(pi |x - center| / radius)) / 2`` on the ball of given radius.

    C^1 across the boundary sphere and analytic inside, so Gauss-Legendre
    converges spectrally when the quadrature window matches the support.
    """
    c, r, support = _radial(center, radius, dim)

    def ev(X):
        s = np.linalg.norm(X - c, axis=-1) / r
        return np.where(s <= 1.0, height * 0.5 * (1.0 + np.cos(np.pi * s)), 0.0)

    return ScalarField(ev, support, f"cos({c.tolist()},{r:g})", abs(height))


def polynomial_bump(center=0.0, radius: float = 1.0, height: float = 1.0, dim: int | None = None) -> ScalarField:
    """``height * (1 - |x - center|^2 / radius^2)_+``; a quadratic on its support."""
    c, r, support = _radial(center, radius, dim)
    return ScalarField(
        lambda X: height * np.maximum(0.0, 1.0 - np.sum((X - c) ** 2, axis=-1) / r**2),
        support,
        f"poly({c.tolist()},{r:g})",
        abs(height),
    )


def constant_field(value: float, window: Window) -> ScalarField:
    """``value`` times the indicator of ``window`` (not continuous; for quadrature sanity checks)."""
    v = float(value)
    return ScalarField(lambda X: np.full(X.shape[:-1], v), window, f"const({v:g})", abs(v))


# ----------------------------------------------------------------------------
# symmetric kernels


def _combos(n: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(n), k))


def _elementary(vals: np.ndarray, i: int) -> np.ndarray:
    """Elementary symmetric sums ``e_i`` of the columns of ``vals`` (shape ``(B, n)``)."""
    out = np.zeros(vals.shape[0])
    for I in _combos(vals.shape[1], i):
        out = out + np.prod(vals[:, list(I)], axis=1)
    return out


class SymmetricKernel:
    """Symmetric function of ``degree`` points in ``R^dim``.

    Subclasses implement :meth:`_eval` on canonically ordered ``(B, n, d)``
    arrays.  ``support`` is a window ``W`` such that the kernel vanishes
    unless every argument lies in ``W``; it is ``None`` for degree 0.
    """

    degree: int
    dim: int
    support: Window | None
    label: str = ""

    def __init__(self, degree: int, dim: int, support: Window | None, label: str = ""):
        if degree < 0:
            raise ValueError("kernel degree must be nonnegative")
        self.degree = int(degree)
        self.dim = int(dim)
        self.support = support if self.degree else None
        self.label = label

    def _eval(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _call(self, X: np.ndarray) -> np.ndarray:
        if self.degree > 1:
            X = sort_stack(X)
        return self._eval(X)

    def batch(self, X) -> np.ndarray:
        """Values at every row of ``X`` (shape ``(B, degree, dim)``)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[1] != self.degree or X.shape[2] != self.dim:
            raise ArityMismatch(
                f"kernel of degree {self.degree} in dimension {self.dim} cannot take arguments of shape {X.shape[1:]}"
            )
        B = X.shape[0]
        step = max(1, CHUNK // max(1, self.degree))
        if B <= step:
            return np.asarray(self._call(X), dtype=float)
        return np.concatenate([self._call(X[i : i + step]) for i in range(0, B, step)])

    def __call__(self, *pts) -> float:
        return kernel_eval(self, list(pts))

    def constant_value(self) -> float:
        if self.degree:
            raise ArityMismatch("only degree-0 kernels have a constant value")
        return float(self._eval(np.empty((1, 0, self.dim)))[0])

    @property
    def is_zero(self) -> bool:
        return False

    def __add__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        return Sum([self, other])

    def __sub__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        return Sum([self, Scale(-1.0, other)])

    def __neg__(self) -> "SymmetricKernel":
        return Scale(-1.0, self)

    def __mul__(self, other) -> "SymmetricKernel":
        if isinstance(other, SymmetricKernel):
            return PointwiseMultiply(self, other)
        return Scale(float(other), self)

    def __rmul__(self, other) -> "SymmetricKernel":
        return Scale(float(other), self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(degree={self.degree}, {self.label})"


def lift(obj, dim: int | None = None) -> SymmetricKernel:
    """Coerce a scalar field (degree 1) or a number (degree 0) into a kernel."""
    if isinstance(obj, SymmetricKernel):
        return obj
    if isinstance(obj, ScalarField):
        return TensorPower(obj, 1)
    if dim is None:
        raise ValueError("a dimension is needed to lift a number to a kernel")
    return Constant(float(obj), dim)


def kernel_eval(k: SymmetricKernel, pts: Sequence) -> float:
    """Value of ``k`` at the points ``pts`` (a sequence of ``degree`` points)."""
    if isinstance(pts, np.ndarray) and pts.ndim == 2:
        X = pts
    else:
        if len(pts) != k.degree:
            raise ArityMismatch(f"kernel of degree {k.degree} called with {len(pts)} points")
        X = np.array([as_point(p, k.dim) for p in pts]).reshape(len(pts), k.dim)
    return float(k.batch(X[None])[0])


class Constant(SymmetricKernel):
    def __init__(self, value: float, dim: int = 1):
        super().__init__(0, dim, None, f"{value:g}")
        self.value = float(value)

    def _eval(self, X):
        return np.full(X.shape[0], self.value)


class ZeroKernel(SymmetricKernel):
    def __init__(self, degree: int, dim: int = 1):
        super().__init__(degree, dim, None, "0")

    @property
    def is_zero(self) -> bool:
        return True

    def _eval(self, X):
        return np.zeros(X.shape[0])


class TensorPower(SymmetricKernel):
    """``phi(x_1) ... phi(x_n)``."""

    def __init__(self, phi: ScalarField, n: int):
        super().__init__(n, phi.dim, phi.support, f"{phi.label}^{n}")
        self.phi = phi

    def _eval(self, X):
        if self.degree == 0:
            return np.ones(X.shape[0])
        return np.prod(self.phi(X), axis=1)


class SymTensorProduct(SymmetricKernel):
    """Symmetric tensor product ``k1 ⊙ k2``.

    Both factors are symmetric, so the full permutation average collapses to
    an average over the ``C(a+b, a)`` ways of splitting the arguments.
    """

    def __init__(self, k1: SymmetricKernel, k2: SymmetricKernel):
        if k1.dim != k2.dim:
            raise ValueError("kernels live in different dimensions")
        n = k1.degree + k2.degree
        super().__init__(n, k1.dim, hull_of([k1.support, k2.support]), f"({k1.label}⊙{k2.label})")
        self.k1, self.k2 = k1, k2
        self._splits = [(list(I), [j for j in range(n) if j not in I]) for I in _combos(n, k1.degree)]

    def _eval(self, X):
        out = np.zeros(X.shape[0])
        for I, J in self._splits:
            out = out + self.k1._call(X[:, I]) * self.k2._call(X[:, J])
        return out / len(self._splits)


class Sum(SymmetricKernel):
    def __init__(self, kernels: Sequence[SymmetricKernel]):
        kernels = list(kernels)
        if not kernels or len({k.degree for k in kernels}) != 1:
            raise ValueError("Sum needs at least one kernel and equal degrees")
        super().__init__(
            kernels[0].degree, kernels[0].dim, hull_of(k.support for k in kernels), "+".join(k.label for k in kernels)
        )
        self.kernels = kernels

    def _eval(self, X):
        out = np.zeros(X.shape[0])
        for k in self.kernels:
            out = out + k._eval(X)
        return out


class Scale(SymmetricKernel):
    def __init__(self, c: float, k: SymmetricKernel):
        super().__init__(k.degree, k.dim, k.support, f"{c:g}*{k.label}")
        self.c, self.k = float(c), k

    def _eval(self, X):
        return self.c * self.k._eval(X)


class PointwiseMultiply(SymmetricKernel):
    def __init__(self, k1: SymmetricKernel, k2: SymmetricKernel):
        if k1.degree != k2.degree:
            raise ValueError("pointwise products need equal degrees")
        if k1.support is None or k2.support is None:
            support = k1.support or k2.support
        else:
            support = k1.support.intersect(k2.support) or k1.support.hull(k2.support)
        super().__init__(k1.degree, k1.dim, support, f"({k1.label}·{k2.label})")
        self.k1, self.k2 = k1, k2

    def _eval(self, X):
        return self.k1._eval(X) * self.k2._eval(X)


class MultiBump(SymmetricKernel):
    """Symmetrization of ``phi_1(x_1) ... phi_n(x_n)``: a permanent divided by ``n!``."""

    def __init__(self, fields: Sequence[ScalarField]):
        fields = list(fields)
        super().__init__(len(fields), fields[0].dim, hull_of(f.support for f in fields), "mb")
        self.fields = fields
        self._perms = list(permutations(range(len(fields))))

    def _eval(self, X):
        n = self.degree
        if n == 0:
            return np.ones(X.shape[0])
        M = np.stack([f(X) for f in self.fields], axis=1)  # M[b, i, j] = phi_i(x_j)
        rows = np.arange(n)
        out = np.zeros(X.shape[0])
        for s in self._perms:
            out = out + np.prod(M[:, rows, list(s)], axis=1)
        return out / len(self._perms)


class PartialEval(SymmetricKernel):
    """``k(x, ., ..., .)``: a degree ``n+1`` kernel with its first argument frozen."""

    def __init__(self, k: SymmetricKernel, x):
        if k.degree < 1:
            raise ArityMismatch("cannot freeze an argument of a degree-0 kernel")
        super().__init__(k.degree - 1, k.dim, k.support, f"{k.label}(x,·)")
        self.k = k
        self.x = as_point(x, k.dim)

    def _eval(self, X):
        head = np.broadcast_to(self.x, (X.shape[0], 1, self.dim))
        return self.k._call(np.concatenate([head, X], axis=1))


class SumOverVariables(SymmetricKernel):
    """Multiplier ``(psi(x_1) + ... + psi(x_n)) k``."""

    def __init__(self, psi: ScalarField, k: SymmetricKernel):
        super().__init__(k.degree, k.dim, k.support, f"A0[{psi.label}]{k.label}")
        self.psi, self.k = psi, k

    def _eval(self, X):
        return _elementary(self.psi(X), 1) * self.k._eval(X)


class SubsetSymmetricMultiplier(SymmetricKernel):
    """Multiplier by the sum of ``psi(x_i1) ... psi(x_ii)`` over ``i``-subsets of the arguments."""

    def __init__(self, psi: ScalarField, i: int, k: SymmetricKernel):
        if not 0 <= i <= k.degree:
            raise IndexOutOfRange(f"subset size {i} outside 0..{k.degree}")
        super().__init__(k.degree, k.dim, k.support, f"B{i}[{psi.label}]{k.label}")
        self.psi, self.i, self.k = psi, int(i), k

    def _eval(self, X):
        if self.i == 0:
            return self.k._eval(X)
        return _elementary(self.psi(X), self.i) * self.k._eval(X)


class IntegrateFirstVariable(SymmetricKernel):
    """``(x_1..x_{n-1}) -> ∫ psi(x) k(x, x_1, ..., x_{n-1}) dx`` on a quadrature grid.

    The weighted table ``w_j psi(node_j)`` is built once at construction; only
    nodes where it is nonzero are kept.
    """

    def __init__(self, psi: ScalarField, k: SymmetricKernel, grid: "QuadratureGrid"):
        if k.degree < 1:
            raise ArityMismatch("integration needs a kernel of degree >= 1")
        if not (grid.window.contains_window(psi.support) or grid.window.contains_window(k.support)):
            raise SupportExceedsWindow(f"grid window {grid.window} covers neither {psi.support} nor {k.support}")
        super().__init__(k.degree - 1, k.dim, k.support, f"∫{psi.label}·{k.label}")
        self.psi, self.k, self.grid = psi, k, grid
        wpsi = grid.weights * psi(grid.nodes)
        keep = wpsi != 0.0
        self._nodes = grid.nodes[keep]
        self._wpsi = wpsi[keep]

    def _eval(self, X):
        B, m, d = X.shape
        M = self._nodes.shape[0]
        if M == 0:
            return np.zeros(B)
        step = max(1, CHUNK // M)
        out = np.empty(B)
        for s in range(0, B, step):
            Xs = X[s : s + step]
            b = Xs.shape[0]
            Y = np.empty((b, M, m + 1, d))
            Y[:, :, 0, :] = self._nodes[None]
            Y[:, :, 1:, :] = Xs[:, None]
            out[s : s + b] = self.k._call(Y.reshape(b * M, m + 1, d)).reshape(b, M) @ self._wpsi
        return out


class Diagonal(SymmetricKernel):
    """``x -> k(x, x)`` for a degree-2 kernel."""

    def __init__(self, k: SymmetricKernel):
        if k.degree != 2:
            raise ArityMismatch("the diagonal is defined for degree-2 kernels")
        super().__init__(1, k.dim, k.support, f"diag({k.label})")
        self.k = k

    def _eval(self, X):
        return self.k._call(np.concatenate([X, X], axis=1))


class SymmetrizedFunction(SymmetricKernel):
    """Permutation average of an arbitrary vectorized function of ``degree`` points.

    ``fn`` maps ``(B, n, d)`` arrays to ``(B,)`` and should vanish unless all
    arguments lie in ``support``; values outside are masked to zero.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], degree: int, support: Window, label: str = "sym"):
        super().__init__(degree, support.dim, support, label)
        self.fn = fn
        self._perms = [list(p) for p in permutations(range(degree))]

    def _eval(self, X):
        if self.degree == 0:
            return np.asarray(self.fn(X), dtype=float).reshape(X.shape[0])
        inside = np.all(self.support.contains(X), axis=1)
        out = np.zeros(X.shape[0])
        for p in self._perms:
            out = out + self.fn(X[:, p])
        return np.where(inside, out / len(self._perms), 0.0)


class DifferenceKernel(SymmetricKernel):
    """Translation-invariant pair kernel ``profile(x - y)`` restricted to ``window``^2."""

    def __init__(self, profile: ScalarField, window: Window):
        super().__init__(2, window.dim, window, f"{profile.label}(x-y)")
        self.profile, self.window = profile, window

    def _eval(self, X):
        inside = self.window.contains(X[:, 0]) & self.window.contains(X[:, 1])
        return np.where(inside, self.profile(X[:, 0] - X[:, 1]), 0.0)


class TabulatedKernel(SymmetricKernel):
    """Kernel known only on finitely many point tuples (an associative table)."""

    def __init__(self, table: dict, degree: int, dim: int, support: Window | None, label: str = "tab"):
        super().__init__(degree, dim, support, label)
        self.table = dict(table)

    @staticmethod
    def key(points: np.ndarray) -> tuple:
        """Table key of a ``(n, d)`` tuple of points (order-insensitive)."""
        P = sort_stack(np.asarray(points, dtype=float)[None])[0]
        return tuple(tuple(float(v) for v in row) for row in P)

    def _eval(self, X):
        out = np.empty(X.shape[0])
        for b, row in enumerate(X):
            key = tuple(tuple(float(v) for v in p) for p in row)
            try:
                out[b] = self.table[key]
            except KeyError:
                raise ProbeLookupError(f"no tabulated value at {key}") from None
        return out


def sym_tensor(k1, k2) -> SymmetricKernel:
    """``k1 ⊙ k2`` with scalar fields and numbers lifted to kernels."""
    dim = k1.dim if hasattr(k1, "dim") else getattr(k2, "dim", None)
    return SymTensorProduct(lift(k1, dim), lift(k2, dim))


# ----------------------------------------------------------------------------
# quadrature

RULES = ("midpoint", "gauss")


class QuadratureGrid:
    """Tensor-product rule with ``nodes_per_axis`` nodes on each axis of ``window``.

    ``rule`` is ``"midpoint"`` or ``"gauss"`` (Gauss-Legendre).  Midpoint
    weights sum to the window volume; Gauss-Legendre integrates polynomials of
    degree ``2m - 1`` exactly along each axis.
    """

    def __init__(self, window: Window, nodes_per_axis: int = 64, rule: str = "gauss"):
        rule = "gauss" if rule == "gauss-legendre" else rule
        if rule not in RULES:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        m = int(nodes_per_axis)
        if m < 1:
            raise ValueError("need at least one node per axis")
        self.window, self.nodes_per_axis, self.rule = window, m, rule
        if rule == "midpoint":
            t = (np.arange(m) + 0.5) / m
            u = np.full(m, 1.0 / m)
        else:
            x, w = np.polynomial.legendre.leggauss(m)
            t, u = 0.5 * (x + 1.0), 0.5 * w
        axes = [lo + (hi - lo) * t for lo, hi in zip(window.lo, window.hi)]
        wts = [(hi - lo) * u for lo, hi in zip(window.lo, window.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        wmesh = np.meshgrid(*wts, indexing="ij")
        self.nodes = np.stack([g.ravel() for g in mesh], axis=-1)
        self.weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=-1)
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def cell(self) -> np.ndarray:
        """Mesh width per axis."""
        return self.window.widths / self.nodes_per_axis

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __repr__(self) -> str:
        return f"QuadratureGrid({self.window}, m={self.nodes_per_axis}, rule={self.rule!r})"


def default_grid(window: Window) -> QuadratureGrid:
    """Gauss-Legendre with 64 nodes for ``d = 1``, midpoint with 64 nodes per axis otherwise."""
    return QuadratureGrid(window, 64, "gauss" if window.dim == 1 else "midpoint")


def _product_factors(k: SymmetricKernel) -> list[ScalarField] | None:
    """Factors ``phi_i`` when ``∫ k`` equals ``prod_i ∫ phi_i`` (tensor powers and multi-bumps)."""
    if type(k) is TensorPower:
        return [k.phi] * k.degree
    if type(k) is MultiBump:
        return list(k.fields)
    return None


def integrate(k, grid: QuadratureGrid, *, absolute: bool = False, density=None) -> float:
    """Tensor-product quadrature of ``∫ k(x_1..x_n) dx_1..dx_n`` over ``grid.window^n``.

    ``absolute`` integrates ``|k|``; ``density`` multiplies each variable's
    measure by ``density(x_i)``.
    """
    k = lift(k, grid.dim)
    n = k.degree
    if n == 0:
        v = k.constant_value()
        return abs(v) if absolute else v
    if not grid.window.contains_window(k.support):
        raise SupportExceedsWindow(f"support {k.support} not inside grid window {grid.window}")
    w = grid.weights if density is None else grid.weights * np.asarray(density(grid.nodes), dtype=float)
    fields = _product_factors(k)
    if fields is not None:
        # product kernels factor into one-point integrals
        one = [float((np.abs(f(grid.nodes)) if absolute else f(grid.nodes)) @ w) for f in fields]
        return float(np.prod(one))
    keep = w != 0.0
    nodes, w = grid.nodes[keep], w[keep]
    M = w.shape[0]
    total = M**n
    step = max(1, CHUNK // n)
    parts = []
    for start in range(0, total, step):
        flat = np.arange(start, min(total, start + step))
        idx = np.stack(np.unravel_index(flat, (M,) * n), axis=1)
        vals = k._call(nodes[idx])
        if absolute:
            vals = np.abs(vals)
        parts.append(vals @ np.prod(w[idx], axis=1))
    return float(np.sum(parts))


# ----------------------------------------------------------------------------
# probe-based comparison


def probe_tuples(window: Window, n: int, count: int = 24, seed: int = 12345) -> np.ndarray:
    """Deterministic uniform probe tuples, shape ``(count, n, d)``."""
    rng = np.random.default_rng([seed, n, window.dim])
    return window.lo_array + window.widths * rng.random((count, n, window.dim))


def kernel_distance(k1: SymmetricKernel, k2: SymmetricKernel, window: Window, count: int = 24, seed: int = 12345) -> float:
    """Max absolute difference of two equal-degree kernels on probe tuples."""
    if k1.degree != k2.degree:
        raise ArityMismatch("kernels of different degree")
    X = probe_tuples(window, k1.degree, count, seed)
    return float(np.max(np.abs(k1.batch(X) - k2.batch(X)), initial=0.0))
