import math

import numpy as np
import pytest

from classifiability.core import NeighborhoodSpec
from classifiability.errors import TooManyClusters
from classifiability.estimator import classifiability
from classifiability.synth import (
    KINDS,
    SynthSpec,
    gen_blobs,
    gen_circles,
    gen_linear_1d,
    gen_madelon_like,
    gen_moons,
    gen_overlap_uniform_1d,
    generate,
    madelon_flip_limit,
    overlap_uniform_limit,
)

from conftest import majority_excess, make_dataset


def knn(k):
    return NeighborhoodSpec.knn(k)


def test_circles_noiseless_geometry():
    ds = gen_circles(400, 0.0, radius_ratio=0.5, seed=1)
    r = np.hypot(ds.features[:, 0], ds.features[:, 1])
    assert np.all(np.abs(r[ds.labels == 0] - 1.0) <= 1e-12)
    assert np.all(np.abs(r[ds.labels == 1] - 0.5) <= 1e-12)
    assert ds.class_counts().tolist() == [200, 200]


@pytest.mark.parametrize("k", [1, 16, 32])
def test_noiseless_circles_are_separable(k):
    # 200 points per ring, rings 0.5 apart: about 32 same-ring points lie closer than the gap
    assert classifiability(gen_circles(400, 0.0, 0.5, seed=0), knn(k)).limit >= 0.99


def test_noiseless_circles_radius_below_gap_is_pure():
    assert classifiability(gen_circles(400, 0.0, 0.5, seed=0), NeighborhoodSpec.radius(0.49)).limit == 1.0


def test_large_k_on_circles_reaches_across_the_gap():
    assert classifiability(gen_circles(400, 0.0, 0.5, seed=0), knn(200)).limit < 0.99


def test_moons():
    assert classifiability(gen_moons(500, 0.0, seed=0), knn(16)).limit >= 0.99
    noisy = gen_moons(500, 1.0, seed=0)
    assert noisy.class_counts().tolist() == [250, 250]
    assert classifiability(noisy, knn(16)).limit < 0.9


def test_blobs():
    centers = [(0, 0), (1, 0), (0, 1), (1, 1)]
    ds = gen_blobs(400, centers, noise=0.01, seed=0)
    assert ds.n_classes == 4
    assert classifiability(ds, knn(16)).limit >= 0.99
    # a k-neighbor majority over a 50/50 mix averages above 1/2 by majority_excess(k)
    same = gen_blobs(2000, [(0, 0), (0, 0)], noise=1.0, seed=0)
    assert abs(classifiability(same, knn(32)).limit - (0.5 + majority_excess(32))) <= 0.02


def test_coincident_blobs_swap_symmetry():
    ds = gen_blobs(600, [(0, 0), (0, 0)], noise=1.0, seed=4)
    swapped = make_dataset(ds.features, 1 - ds.labels, 2)
    for spec in (knn(16), NeighborhoodSpec.radius(0.3)):
        assert classifiability(ds, spec).limit == classifiability(swapped, spec).limit


def test_linear_1d_moments():
    ds = gen_linear_1d(20_000, seed=5)
    x0 = ds.features[ds.labels == 0, 0]
    assert abs(x0.mean() - 2 / 3) <= 4 * math.sqrt(1 / 18 / x0.size)
    assert np.all((ds.features >= 0) & (ds.features <= 1))


def test_overlap_uniform_limit():
    assert overlap_uniform_limit(0.5) == 0.75
    assert overlap_uniform_limit(0.0) == 0.5
    assert overlap_uniform_limit(2.0) == 1.0
    est = classifiability(gen_overlap_uniform_1d(10_000, 0.5, seed=0), knn(64)).limit
    # half the points sit in the 50/50 overlap
    assert abs(est - (0.75 + majority_excess(64) / 2)) <= 0.01


@pytest.mark.parametrize("kind", KINDS)
def test_generators_deterministic(kind):
    spec = SynthSpec(kind, 300, noise=0.2, seed=9)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    other = generate(SynthSpec(kind, 300, noise=0.2, seed=10))
    assert not np.array_equal(a.features, other.features)


def test_generator_validation():
    with pytest.raises(ValueError):
        gen_circles(1)
    with pytest.raises(ValueError):
        gen_moons(10, noise=-1.0)
    with pytest.raises(ValueError):
        gen_blobs(10, [(0, 0)])
    with pytest.raises(ValueError):
        SynthSpec("spirals", 10)
    with pytest.raises(TooManyClusters):
        gen_madelon_like(100, n_informative=2, n_classes=4, clusters_per_class=2)


def test_madelon_shape_and_columns():
    ds = gen_madelon_like(1000, n_features=20, n_informative=5, n_redundant=5, seed=0)
    assert ds.features.shape == (1000, 20)
    assert np.all(ds.features[:, :5].std(axis=0) > 0)
    # redundant columns lie in the span of the informative ones
    inf, red = ds.features[:, :5], ds.features[:, 5:10]
    coef, *_ = np.linalg.lstsq(inf, red, rcond=None)
    assert np.allclose(inf @ coef, red, atol=1e-9)


def test_madelon_flip_count():
    clean = gen_madelon_like(1000, n_classes=4, clusters_per_class=1, flip_fraction=0.0, seed=3)
    flipped = gen_madelon_like(1000, n_classes=4, clusters_per_class=1, flip_fraction=0.2, seed=3)
    assert clean.class_counts().tolist() == [250] * 4
    assert madelon_flip_limit(0.2, 4) == pytest.approx(0.85, abs=1e-15)
    assert flipped.class_counts().sum() == 1000


def test_madelon_separable_and_flipped():
    kw = dict(n_features=10, n_informative=5, n_redundant=0, n_classes=4, clusters_per_class=2,
              class_sep=8.0)
    ds = gen_madelon_like(4000, flip_fraction=0.0, seed=0, **kw)
    assert classifiability(ds, knn(32)).limit >= 0.95
    ds = gen_madelon_like(4000, flip_fraction=0.2, seed=0, **kw)
    assert abs(classifiability(ds, knn(32)).limit - 0.85) <= 0.03


def test_extra_noise_features_do_not_raise_estimate():
    base, noisy = [], []
    for seed in range(10):
        ds = gen_madelon_like(800, n_features=8, n_informative=4, n_redundant=2, n_classes=2,
                              clusters_per_class=2, class_sep=1.5, flip_fraction=0.0, seed=seed)
        rng = np.random.default_rng(100 + seed)
        extra = np.hstack([ds.features, rng.normal(size=(ds.n, 12))])
        base.append(classifiability(ds, knn(16)).limit)
        noisy.append(classifiability(make_dataset(extra, ds.labels, 2), knn(16)).limit)
    diff = np.asarray(noisy) - np.asarray(base)
    assert diff.mean() <= 2 * diff.std() / math.sqrt(len(diff))
