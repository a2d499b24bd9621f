"""Falling-factorial pairings on configurations and on weighted Dirac sums.

``falling_pair(gamma, k)`` is the sum of ``k`` over ordered tuples of
distinct points of ``gamma``.  Because kernels are symmetric it is computed
as ``n!`` times the sum over ``n``-subsets, one kernel evaluation per subset.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .configspace import Configuration, WeightedConfiguration
from .errors import DomainError
from .kernels import CHUNK, PartialEval, ScalarField, SymmetricKernel, TensorPower


@lru_cache(maxsize=256)
def subset_index(N: int, n: int) -> np.ndarray:
    """All ``n``-subsets of ``range(N)`` in lexicographic order, shape ``(C(N,n), n)``."""
    idx = np.fromiter(
        (i for c in combinations(range(N), n) for i in c), dtype=np.intp, count=math.comb(N, n) * n
    ).reshape(math.comb(N, n), n)
    idx.setflags(write=False)
    return idx


def falling_pair(gamma: Configuration, k: SymmetricKernel) -> float:
    """``<(gamma)_n, k>``: sum over ordered ``n``-tuples of distinct points."""
    n, N = k.degree, len(gamma)
    if n == 0:
        return k.constant_value()
    if n > N:
        return 0.0
    X = gamma.points[subset_index(N, n)]
    return math.factorial(n) * float(np.sum(k.batch(X)))


def falling_pair_stack(G: np.ndarray, k: SymmetricKernel) -> np.ndarray:
    """Vectorized :func:`falling_pair` over a stack of configurations ``(B, N, d)``."""
    B, N = G.shape[0], G.shape[1]
    n = k.degree
    if n == 0:
        return np.full(B, k.constant_value())
    if n > N or B == 0:
        return np.zeros(B)
    idx = subset_index(N, n)
    C = idx.shape[0]
    step = max(1, CHUNK // (C * n))
    out = np.empty(B)
    for s in range(0, B, step):
        Gs = G[s : s + step]
        b = Gs.shape[0]
        vals = k._call(Gs[:, idx].reshape(b * C, n, G.shape[2])).reshape(b, C)
        out[s : s + b] = vals.sum(axis=1)
    return math.factorial(n) * out


def falling_pair_ordered(gamma: Configuration, k: SymmetricKernel) -> float:
    """Reference enumeration over all ordered tuples of distinct points (no symmetry used)."""
    n, N = k.degree, len(gamma)
    if n == 0:
        return k.constant_value()
    tuples = list(permutations(range(N), n))
    if not tuples:
        return 0.0
    return float(np.sum(k.batch(gamma.points[np.array(tuples, dtype=np.intp)])))


def weighted_tuples(charges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Index tuples with nonzero falling-factorial coefficient for a weighted Dirac sum.

    The coefficient of ``(i_1, ..., i_n)`` is the product over ``t`` of
    ``c_{i_t}`` minus the number of earlier occurrences of ``i_t``.  Enumeration
    is depth first and prunes a branch as soon as a factor vanishes.
    """
    charges = np.asarray(charges, dtype=float)
    N = charges.shape[0]
    tuples: list[tuple[int, ...]] = []
    coefs: list[float] = []
    used = [0] * N
    path: list[int] = []

    def dfs(coef: float) -> None:
        if len(path) == n:
            tuples.append(tuple(path))
            coefs.append(coef)
            return
        for i in range(N):
            factor = charges[i] - used[i]
            if factor == 0.0:
                continue
            used[i] += 1
            path.append(i)
            dfs(coef * factor)
            path.pop()
            used[i] -= 1

    dfs(1.0)
    return np.array(tuples, dtype=np.intp).reshape(len(tuples), n), np.array(coefs)


def falling_pair_weighted(omega: WeightedConfiguration, k: SymmetricKernel) -> float:
    """``<(omega)_n, k>`` for ``omega = sum_i c_i delta_{x_i}``, by the charge recursion."""
    n = k.degree
    if n == 0:
        return k.constant_value()
    idx, coef = weighted_tuples(omega.charges, n)
    if coef.size == 0:
        return 0.0
    return float(coef @ k.batch(omega.points[idx]))


def chu_vandermonde_check(
    omega1: WeightedConfiguration, omega2: WeightedConfiguration, k: SymmetricKernel
) -> tuple[float, float]:
    """Both sides of the binomial identity for ``(omega1 + omega2)_n`` paired with ``k``.

    The right side pairs ``(omega1)_j`` with the arguments in each ``j``-subset
    ``S`` of positions and ``(omega2)_{n-j}`` with the complement, summed over
    all ``j`` and ``S``.
    """
    total = omega1 + omega2  # raises OverlappingSupports
    lhs = falling_pair_weighted(total, k)
    n = k.degree
    if n == 0:
        return lhs, k.constant_value()
    d = total.dim
    rhs = 0.0
    for j in range(n + 1):
        i1, c1 = weighted_tuples(omega1.charges, j)
        i2, c2 = weighted_tuples(omega2.charges, n - j)
        if c1.size == 0 or c2.size == 0:
            continue
        P1 = omega1.points.reshape(-1, d)[i1]  # (T1, j, d)
        P2 = omega2.points.reshape(-1, d)[i2]  # (T2, n-j, d)
        T1, T2 = c1.size, c2.size
        weights = np.outer(c1, c2).ravel()
        for S in combinations(range(n), j):
            rest = [p for p in range(n) if p not in S]
            X = np.empty((T1, T2, n, d))
            X[:, :, list(S), :] = P1[:, None]
            X[:, :, rest, :] = P2[None, :]
            rhs += float(weights @ k.batch(X.reshape(T1 * T2, n, d)))
    return lhs, rhs


def generating_function(gamma: Configuration, xi: ScalarField) -> float:
    """``E_xi(gamma) = prod_{x in gamma} (1 + xi(x))``."""
    if len(gamma) == 0:
        return 1.0
    v = 1.0 + xi(gamma.points)
    if np.any(v <= 0.0):
        raise DomainError("1 + xi must be positive at every point of the configuration")
    return float(np.prod(v))


def generating_series(gamma: Configuration, xi: ScalarField, terms: int) -> list[float]:
    """Partial sums ``sum_{n <= N} <(gamma)_n, xi^{⊗n}> / n!`` for ``N = 0..terms``."""
    out, acc = [], 0.0
    for n in range(terms + 1):
        acc += falling_pair(gamma, TensorPower(xi, n)) / math.factorial(n)
        out.append(acc)
    return out


def one_point_reduction_check(gamma: Configuration, k: SymmetricKernel) -> tuple[float, float]:
    """``sum_{x in gamma} <(gamma \\ x)_n, k(x, .)>`` against ``<(gamma)_{n+1}, k>``."""
    lhs = sum(falling_pair(gamma.remove(x), PartialEval(k, x)) for x in gamma)
    return float(lhs), falling_pair(gamma, k)


# ----------------------------------------------------------------------------
# scalar falling factorials


def scalar_falling(t: float, n: int) -> float:
    """``(t)_n = t (t-1) ... (t-n+1)``, with ``(t)_0 = 1``."""
    out = 1.0
    for i in range(n):
        out *= t - i
    return out


def scalar_newton_check(t: float, n: int) -> tuple[float, float]:
    """Forward difference ``(t+1)_n - (t)_n`` against ``n (t)_{n-1}``."""
    if n == 0:
        return 0.0, 0.0
    return scalar_falling(t + 1, n) - scalar_falling(t, n), n * scalar_falling(t, n - 1)


def scalar_backward_check(t: float, n: int) -> tuple[float, float]:
    """Backward difference ``(t-1)_n - (t)_n`` against ``-n (t-1)_{n-1}``."""
    if n == 0:
        return 0.0, 0.0
    return scalar_falling(t - 1, n) - scalar_falling(t, n), -n * scalar_falling(t - 1, n - 1)


def scalar_generating_check(lam: float, t: float, terms: int = 50) -> tuple[float, float]:
    """Truncated ``sum lam^n (t)_n / n!`` against ``(1 + lam)^t``."""
    acc, term = 0.0, 1.0
    for n in range(terms):
        acc += term
        term *= lam * (t - n) / (n + 1)
    return acc, (1.0 + lam) ** t
