"""Points, windows, finite configurations and the Poisson sampler.

Configurations are stored as ``(N, d)`` float arrays whose rows are sorted
lexicographically, which makes equality and hashing canonical.  Most of the
numerical machinery works on *stacks*: arrays of shape ``(B, N, d)`` holding
``B`` configurations of the same cardinality ``N``.  Functions on
configurations are symmetric, so the row order inside a stack never matters
to them; only :class:`Configuration` insists on the sorted order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import DuplicatePoint, MissingPoint, OverlappingSupports

MAX_DIM = 3
SAMPLE_BATCH = 8192
SEED_LIMIT = 2**64


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Validate ``x`` as a point and return it as a read-only float vector."""
    p = np.array(x, dtype=float, ndmin=1)
    if p.ndim != 1:
        raise ValueError(f"a point must be a flat coordinate vector, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"expected a point in dimension {dim}, got {p.shape[0]} coordinates")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point coordinates must be finite, got {p}")
    p.setflags(write=False)
    return p


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"ambient dimension must be between 1 and {MAX_DIM}, got {dim}")
    return dim


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("window bounds have different dimensions")
        _check_dim(len(lo))
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("window bounds must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"window needs lo < hi on every axis, got {lo} and {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int = 1) -> "Window":
        return cls((lo,) * dim, (hi,) * dim)

    @classmethod
    def parse(cls, text: str) -> "Window":
        """Parse ``"lo,hi[,lo,hi...]"`` as used on the command line."""
        values = [float(v) for v in text.replace(" ", "").split(",") if v]
        if len(values) < 2 or len(values) % 2:
            raise ValueError(f"window needs pairs lo,hi per axis, got {text!r}")
        return cls(tuple(values[0::2]), tuple(values[1::2]))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def hi_array(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def widths(self) -> np.ndarray:
        return self.hi_array - self.lo_array

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_array + self.hi_array)

    def contains(self, X) -> np.ndarray:
        """Boolean mask over the leading axes of ``X`` (closed box)."""
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.lo_array) & (X <= self.hi_array), axis=-1)

    def contains_window(self, other: "Window | None") -> bool:
        if other is None:
            return True
        if other.dim != self.dim:
            return False
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def hull(self, other: "Window | None") -> "Window":
        if other is None:
            return self
        return Window(tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))

    def intersect(self, other: "Window") -> "Window | None":
        lo = tuple(map(max, self.lo, other.lo))
        hi = tuple(map(min, self.hi, other.hi))
        if all(a < b for a, b in zip(lo, hi)):
            return Window(lo, hi)
        return None

    def to_list(self) -> list[float]:
        return [v for pair in zip(self.lo, self.hi) for v in pair]


def hull_of(windows: Iterable["Window | None"]) -> Window | None:
    out = None
    for w in windows:
        if w is not None:
            out = w if out is None else out.hull(w)
    return out


# ----------------------------------------------------------------------------
# canonical ordering


def lex_order(P: np.ndarray) -> np.ndarray:
    """Indices sorting the rows of ``P`` (shape ``(N, d)``) lexicographically."""
    if P.shape[-1] == 1:
        return np.argsort(P[:, 0], kind="stable")
    return np.lexsort(P.T[::-1])


def sort_stack(G: np.ndarray) -> np.ndarray:
    """Sort every configuration of a ``(B, N, d)`` stack lexicographically."""
    if G.shape[1] < 2:
        return G
    if G.shape[2] == 1:
        return np.sort(G, axis=1)
    keys = tuple(G[:, :, a] for a in range(G.shape[2] - 1, -1, -1))
    idx = np.lexsort(keys, axis=-1)
    return np.take_along_axis(G, idx[:, :, None], axis=1)


def _has_coincidence(G: np.ndarray) -> np.ndarray:
    """Per-row flag: a sorted stack row holds two equal points."""
    if G.shape[1] < 2:
        return np.zeros(G.shape[0], dtype=bool)
    return np.any(np.all(G[:, 1:] == G[:, :-1], axis=-1), axis=1)


# ----------------------------------------------------------------------------
# configurations


class Configuration:
    """Finite set of pairwise distinct points in ``R^d``.

    Point equality is exact coordinate equality.  Instances are immutable;
    :meth:`union` and :meth:`remove` return new configurations.
    """

    __slots__ = ("_points",)

    def __init__(self, points: Sequence | np.ndarray = (), dim: int | None = None):
        arr = np.array(points, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, _check_dim(dim or 1))
        elif arr.ndim == 1:
            # a flat list of scalars is a list of 1-d points
            if dim not in (None, 1):
                raise ValueError("flat coordinate lists describe 1-d points only")
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError(f"points must form an (N, d) array, got shape {arr.shape}")
        _check_dim(arr.shape[1])
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, got {arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("configuration points must be finite")
        arr = arr[lex_order(arr)]
        if _has_coincidence(arr[None])[0]:
            raise DuplicatePoint("configuration points must be pairwise distinct")
        arr.setflags(write=False)
        self._points = arr

    @classmethod
    def _from_sorted(cls, arr: np.ndarray) -> "Configuration":
        obj = cls.__new__(cls)
        arr = np.array(arr, dtype=float)
        arr.setflags(write=False)
        obj._points = arr
        return obj

    @classmethod
    def empty(cls, dim: int = 1) -> "Configuration":
        return cls((), dim=dim)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._points)

    def index(self, x) -> int:
        """Row index of ``x``, or -1 when absent."""
        x = as_point(x, self.dim)
        hits = np.flatnonzero(np.all(self._points == x, axis=1))
        return int(hits[0]) if hits.size else -1

    def __contains__(self, x) -> bool:
        return self.index(x) >= 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(np.all(self._points == other._points))

    def __hash__(self) -> int:
        return hash((self._points.shape, self._points.tobytes()))

    def __repr__(self) -> str:
        return f"Configuration({self.to_list()})"

    def union(self, x) -> "Configuration":
        x = as_point(x, self.dim)
        if x in self:
            raise DuplicatePoint(f"point {x.tolist()} already belongs to the configuration")
        return Configuration(np.vstack([self._points, x[None]]))

    def remove(self, x) -> "Configuration":
        i = self.index(x)
        if i < 0:
            raise MissingPoint(f"point {np.asarray(x).tolist()} is not in the configuration")
        return Configuration._from_sorted(np.delete(self._points, i, axis=0))

    def restrict(self, window: Window) -> "Configuration":
        """Intersection with a window, ``gamma ∩ Λ``."""
        return Configuration._from_sorted(self._points[window.contains(self._points)])

    def to_list(self) -> list[list[float]]:
        return self._points.tolist()


def config_union(gamma: Configuration, x) -> Configuration:
    return gamma.union(x)


def config_remove(gamma: Configuration, x) -> Configuration:
    return gamma.remove(x)


@dataclass(frozen=True)
class WeightedConfiguration:
    """Finite weighted Dirac sum ``sum_i c_i delta_{x_i}`` with distinct ``x_i``."""

    points: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        raw = np.array(self.points, dtype=float)
        if raw.ndim == 1:
            raw = raw.reshape(-1, 1)
        cfg = Configuration(raw, dim=raw.shape[1])
        charges = np.array(self.charges, dtype=float).reshape(-1)
        if charges.shape != (len(cfg),):
            raise ValueError("one charge per point is required")
        if not np.all(np.isfinite(charges)):
            raise ValueError("charges must be finite")
        charges = charges[lex_order(raw)]
        charges.setflags(write=False)
        object.__setattr__(self, "points", cfg.points)
        object.__setattr__(self, "charges", charges)

    @classmethod
    def from_configuration(cls, gamma: Configuration) -> "WeightedConfiguration":
        return cls(gamma.points, np.ones(len(gamma)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __add__(self, other: "WeightedConfiguration") -> "WeightedConfiguration":
        """Sum of two weighted configurations with disjoint point sets."""
        for x in other.points:
            if np.any(np.all(self.points == x, axis=1)):
                raise OverlappingSupports(f"point {x.tolist()} carries charge in both summands")
        return WeightedConfiguration(
            np.vstack([self.points, other.points]), np.concatenate([self.charges, other.charges])
        )


# ----------------------------------------------------------------------------
# stack helpers


def add_point_stack(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Adjoin ``X[b]`` to configuration ``G[b]``: ``(B, N, d), (B, d) -> (B, N+1, d)``."""
    return np.concatenate([G, X[:, None, :]], axis=1)


def delete_each_stack(G: np.ndarray) -> np.ndarray:
    """All one-point deletions: ``(B, N, d) -> (B, N, N-1, d)``, slot ``i`` drops point ``i``."""
    B, N, d = G.shape
    if N == 0:
        return np.empty((B, 0, 0, d))
    keep = ~np.eye(N, dtype=bool)
    idx = np.nonzero(keep)[1].reshape(N, N - 1)
    return G[:, idx, :]


def remove_point_stack(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Remove ``X[b]`` from ``G[b]``; every ``X[b]`` must be a point of ``G[b]``."""
    B, N, d = G.shape
    hit = np.all(G == X[:, None, :], axis=-1)
    if not np.all(hit.sum(axis=1) == 1):
        raise MissingPoint("remove_point_stack needs x in gamma for every row")
    keep = ~hit
    return G[keep].reshape(B, N - 1, d)


# ----------------------------------------------------------------------------
# Poisson sampling


@dataclass(frozen=True)
class PoissonSampler:
    """Poisson point process on a window.

    ``intensity`` is either a constant ``z >= 0`` (points per unit volume) or a
    nonnegative scalar field exposing ``bound``, an upper bound of the field on
    the window.  Equal parameters and seed give bit-identical samples.
    """

    window: Window
    intensity: float | Callable = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < SEED_LIMIT:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        if self.is_constant:
            z = float(self.intensity)
            if not (math.isfinite(z) and z >= 0):
                raise ValueError(f"intensity must be finite and nonnegative, got {z}")
            object.__setattr__(self, "intensity", z)
        else:
            bound = getattr(self.intensity, "bound", None)
            if bound is None or not math.isfinite(bound) or bound < 0:
                raise ValueError("a non-constant intensity needs a finite nonnegative 'bound'")

    @property
    def is_constant(self) -> bool:
        return not callable(self.intensity)

    @property
    def dim(self) -> int:
        return self.window.dim

    def density(self, X: np.ndarray) -> np.ndarray:
        """Intensity values at points ``X`` (shape ``(..., d)``)."""
        X = np.asarray(X, dtype=float)
        if self.is_constant:
            return np.full(X.shape[:-1], self.intensity)
        vals = np.asarray(self.intensity(X), dtype=float)
        if np.any(vals < 0):
            raise ValueError("intensity must be nonnegative on the window")
        return vals

    def stream(self) -> Iterator[Configuration]:
        """Sequential sample stream driven by a single generator seeded with ``seed``."""
        rng = np.random.default_rng(self.seed)
        while True:
            yield sample_poisson(self, rng)

    def _uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.window.lo_array + self.window.widths * rng.random((n, self.dim))

    def _draw(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Cardinalities of ``count`` configurations and their points, concatenated in order."""
        if self.is_constant:
            counts = rng.poisson(self.intensity * self.window.volume, size=count)
            P = self._uniform(rng, int(counts.sum()))
        else:
            # thinning against the bound: exact for Poisson processes
            bound = float(self.intensity.bound)
            raw = rng.poisson(bound * self.window.volume, size=count)
            P = self._uniform(rng, int(raw.sum()))
            u = rng.random(P.shape[0])
            keep = u * bound < self.density(P) if P.shape[0] else np.zeros(0, dtype=bool)
            owner = np.repeat(np.arange(count), raw)
            counts = np.bincount(owner[keep], minlength=count)
            P = P[keep]
        return counts, P

    def _redraw_one(self, rng: np.random.Generator) -> np.ndarray:
        while True:
            x = self._uniform(rng, 1)[0]
            if self.is_constant:
                return x
            if rng.random() * self.intensity.bound < self.density(x[None])[0]:
                return x


def _group(sampler: PoissonSampler, rng: np.random.Generator, counts: np.ndarray, P: np.ndarray) -> dict:
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(int)
    groups = {}
    for n in np.unique(counts):
        rows = np.flatnonzero(counts == n)
        idx = starts[rows][:, None] + np.arange(n)[None, :]
        G = sort_stack(P[idx].reshape(rows.size, int(n), sampler.dim))
        bad = _has_coincidence(G)
        while np.any(bad):
            for b in np.flatnonzero(bad):
                row = G[b]
                dup = np.flatnonzero(np.all(row[1:] == row[:-1], axis=-1))[0] + 1
                row[dup] = sampler._redraw_one(rng)
                G[b] = row[lex_order(row)]
            bad = _has_coincidence(G)
        groups[int(n)] = G
    return groups


def sample_poisson(sampler: PoissonSampler, rng: np.random.Generator | None = None) -> Configuration:
    """One Poisson configuration; without ``rng`` the first draw of ``sampler.seed``."""
    rng = np.random.default_rng(sampler.seed) if rng is None else rng
    counts, P = sampler._draw(rng, 1)
    (G,) = _group(sampler, rng, counts, P).values()
    return Configuration._from_sorted(G[0])


@dataclass(frozen=True)
class ConfigSample:
    """I.i.d. configurations grouped by cardinality.

    ``stacks[i]`` has shape ``(S_i, N_i, d)`` with ``N_i`` strictly increasing.
    :meth:`map` evaluates a stack function group by group and concatenates the
    results in a fixed order, so per-sample quantities computed by different
    maps line up index by index.
    """

    dim: int
    stacks: tuple[np.ndarray, ...] = field(repr=False)
    workers: int = 1

    @property
    def count(self) -> int:
        return sum(G.shape[0] for G in self.stacks)

    def cardinalities(self) -> np.ndarray:
        return np.concatenate([np.full(G.shape[0], G.shape[1]) for G in self.stacks]) if self.stacks else np.zeros(0)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        if not self.stacks:
            return np.zeros(0)
        if self.workers > 1 and len(self.stacks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda G: np.asarray(fn(G), dtype=float), self.stacks))
        else:
            parts = [np.asarray(fn(G), dtype=float) for G in self.stacks]
        return np.concatenate(parts)

    def __iter__(self) -> Iterator[Configuration]:
        for G in self.stacks:
            for row in G:
                yield Configuration._from_sorted(row)


def sample_many(
    sampler: PoissonSampler, count: int, batch_size: int = SAMPLE_BATCH, workers: int = 1
) -> ConfigSample:
    """``count`` i.i.d. configurations drawn in batches with child seeds.

    Batch ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so the union
    of results does not depend on how batches are scheduled.
    """
    count = int(count)
    nb = max(1, -(-count // batch_size))
    children = np.random.SeedSequence(sampler.seed).spawn(nb)

    def run(i: int) -> dict:
        rng = np.random.default_rng(children[i])
        size = min(batch_size, count - i * batch_size)
        counts, P = sampler._draw(rng, size)
        return _group(sampler, rng, counts, P)

    if workers > 1 and nb > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(nb)))
    else:
        parts = [run(i) for i in range(nb)] if count > 0 else []
    sizes = sorted({n for part in parts for n in part})
    stacks = tuple(np.concatenate([part[n] for part in parts if n in part], axis=0) for n in sizes)
    for G in stacks:
        G.setflags(write=False)
    return ConfigSample(sampler.dim, stacks, workers)
