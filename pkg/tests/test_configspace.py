import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamma_fdcalc import Configuration, PoissonSampler, WeightedConfiguration, Window, sample_many, sample_poisson
from gamma_fdcalc.configspace import config_remove, config_union
from gamma_fdcalc.errors import DuplicatePoint, MissingPoint, OverlappingSupports

coords = st.floats(-5, 5, allow_nan=False, allow_subnormal=False)


def test_union_examples():
    assert config_union(Configuration([]), 0.0) == Configuration([0.0])
    assert config_union(Configuration([0.0]), 1.0) == Configuration([0.0, 1.0])
    with pytest.raises(DuplicatePoint):
        config_union(Configuration([0.0]), 0.0)


def test_remove_examples():
    assert config_remove(Configuration([0.0, 1.0]), 1.0) == Configuration([0.0])
    assert config_remove(Configuration([0.0]), 0.0) == Configuration([])
    with pytest.raises(MissingPoint):
        config_remove(Configuration([]), 0.0)


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePoint):
        Configuration([0.3, 0.3])


def test_canonical_order_and_hash():
    a = Configuration([[0.5, 1.0], [0.1, 2.0], [0.5, 0.0]])
    b = Configuration([[0.5, 0.0], [0.5, 1.0], [0.1, 2.0]])
    assert a == b and hash(a) == hash(b)
    assert a.to_list() == [[0.1, 2.0], [0.5, 0.0], [0.5, 1.0]]


@given(st.lists(coords, max_size=8, unique=True), coords)
def test_remove_undoes_union(pts, x):
    g = Configuration(pts)
    if x in pts:
        return
    assert g.union(x).remove(x) == g


def test_window_parse_and_checks():
    w = Window.parse("0,1,-1,2")
    assert w.dim == 2 and w.volume == 3.0
    with pytest.raises(ValueError):
        Window.parse("0,1,2")
    with pytest.raises(ValueError):
        Window((1.0,), (0.0,))


def test_weighted_sum_requires_disjoint_points():
    w1 = WeightedConfiguration([[0.1]], [2.0])
    with pytest.raises(OverlappingSupports):
        w1 + WeightedConfiguration([[0.1]], [1.0])


def test_zero_intensity_is_empty():
    s = PoissonSampler(Window.cube(0, 1), 0.0, seed=3)
    assert all(len(sample_poisson(s)) == 0 for _ in range(20))
    assert sample_many(s, 100).cardinalities().sum() == 0


def test_mean_cardinality():
    s = PoissonSampler(Window.cube(0, 1), 5.0, seed=11)
    n = sample_many(s, 100_000).cardinalities()
    se = n.std(ddof=1) / math.sqrt(n.size)
    assert abs(n.mean() - 5.0) <= 3 * se


def test_variance_of_cardinality():
    s = PoissonSampler(Window.cube(0, 2), 3.0, seed=12)
    n = sample_many(s, 100_000).cardinalities().astype(float)
    var = n.var(ddof=1)
    # stderr of the sample variance of a Poisson(6) count: sqrt((mu4 - var^2)/N), mu4 = 3*6^2 + 6
    se = math.sqrt((3 * 36 + 6 - 36) / n.size)
    assert abs(var - 6.0) <= 3 * se


def test_points_stay_in_window():
    w = Window((0.0, -1.0), (2.0, 1.0))
    s = PoissonSampler(w, 2.0, seed=5)
    for G in sample_many(s, 500).stacks:
        assert np.all(w.contains(G))


def test_seed_determinism_and_batching():
    s = PoissonSampler(Window.cube(0, 1), 4.0, seed=99)
    a = sample_many(s, 20_000, workers=1)
    b = sample_many(s, 20_000, workers=4)
    assert len(a.stacks) == len(b.stacks)
    assert all(np.array_equal(x, y) for x, y in zip(a.stacks, b.stacks))
    it1, it2 = s.stream(), s.stream()
    assert [next(it1) for _ in range(5)] == [next(it2) for _ in range(5)]


def test_thinning_matches_density():
    from gamma_fdcalc import ScalarField

    w = Window.cube(0, 1)
    ramp = ScalarField(lambda X: 6.0 * X[..., 0], w, "ramp", 6.0)
    G = sample_many(PoissonSampler(w, ramp, seed=8), 50_000)
    pts = np.concatenate([g.reshape(-1) for g in G.stacks])
    # intensity 6x: expected count 3, mean position 2/3
    assert abs(G.cardinalities().mean() - 3.0) < 0.05
    assert abs(pts.mean() - 2.0 / 3.0) < 0.01


def test_sampler_validation():
    w = Window.cube(0, 1)
    with pytest.raises(ValueError):
        PoissonSampler(w, -1.0)
    with pytest.raises(ValueError):
        PoissonSampler(w, lambda X: X[..., 0])  # no bound
