import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classifiability.core import ClassProbabilities, NeighborhoodSpec
from classifiability.errors import EmptyNeighborhood, KTooLarge, SubsampleTooSmall
from classifiability.estimator import (
    classifiability,
    entropy_map,
    full_entropy,
    jackknife,
    local_entropy,
    local_probabilities,
    metric_sweep,
    overclass_check,
    rho_hat,
    stratified_subsample,
    subsample_sweep,
)
from classifiability.metrics import MetricKind
from classifiability.neighbors import NeighborList
from classifiability.oracle import reference_estimate
from classifiability.synth import gen_blobs, gen_linear_1d

from conftest import make_dataset, random_dataset

# 0.5 e^0.5, 0.75 e^0.25, 0.25 e^0.25 evaluated with mpmath at 30 digits
RHO_HALF = 0.824360635350064073
RHO_75 = 0.963019062515806113
RHO_25 = 0.321006354171935371


def probs(*p):
    return ClassProbabilities(np.asarray(p, dtype=float), 4)


def test_local_probabilities():
    ds = make_dataset(np.zeros((6, 1)), [0, 0, 0, 1, 2, 2], 3)
    nb = NeighborList(np.array([0, 1, 2, 3]), np.zeros(4))
    p = local_probabilities(ds, nb)
    assert p.probs.tolist() == [0.75, 0.25, 0.0] and p.support_size == 4
    empty = local_probabilities(ds, NeighborList(np.array([], dtype=int), np.array([])))
    assert empty.support_size == 0 and not empty.probs.any()
    third = local_probabilities(ds, NeighborList(np.array([0, 3, 4]), np.zeros(3)))
    np.testing.assert_allclose(third.probs, [1 / 3] * 3, atol=1e-15)


def test_rho_hat_values():
    assert rho_hat(probs(1.0, 0.0)).values.tolist() == [1.0, 0.0]
    np.testing.assert_allclose(rho_hat(probs(0.5, 0.5)).values, [RHO_HALF] * 2, rtol=1e-15)
    np.testing.assert_allclose(rho_hat(probs(0.75, 0.25)).values, [RHO_75, RHO_25], rtol=1e-15)
    with pytest.raises(EmptyNeighborhood):
        rho_hat(ClassProbabilities(np.zeros(2), 0))


@pytest.mark.parametrize("p, expected", [((1.0, 0.0), 0.0), ((0.5, 0.5), 0.5), ((0.75, 0.25), 0.25)])
def test_local_entropy_both_forms(p, expected):
    assert local_entropy(probs(*p)) == expected
    assert local_entropy(probs(*p), full=True) == pytest.approx(expected, abs=1e-15)


def test_full_entropy_matches_rho_definition():
    p = probs(0.5, 0.3, 0.2)
    rho = rho_hat(p).values
    direct = -sum(a * math.log(a / r) for a, r in zip(p.probs, rho))
    assert full_entropy(p.probs) == pytest.approx(direct, abs=1e-15)


def test_empty_sentinel_entropy_is_zero():
    assert local_entropy(ClassProbabilities(np.zeros(3), 0)) == 0.0
    assert local_entropy(ClassProbabilities(np.zeros(3), 0), full=True) == 0.0


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=2, max_size=10).filter(lambda c: sum(c) > 0))
def test_simplification_identity_on_counts(counts):
    p = ClassProbabilities.from_counts(counts)
    assert abs(local_entropy(p, full=True) - local_entropy(p)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(1e-9, 1.0), min_size=2, max_size=10))
def test_simplification_identity_on_real_vectors(w):
    p = np.asarray(w) / math.fsum(w)
    assert abs(full_entropy(p) - (1.0 - p.max())) <= 1e-12


def test_pure_neighborhoods_give_one(backend):
    ds = gen_blobs(200, centers=[(0, 0), (10, 0)], noise=0.1, seed=1)
    for spec in (NeighborhoodSpec.knn(10), NeighborhoodSpec.radius(2.0)):
        assert classifiability(ds, spec).limit == 1.0


def test_saturated_radius_gives_majority_proportion(backend):
    rng = np.random.default_rng(0)
    y = np.array([0] * 6 + [1] * 4)
    ds = make_dataset(rng.random((10, 2)), y)
    report = classifiability(ds, NeighborhoodSpec.radius(10.0))
    assert report.limit == 0.6
    assert classifiability(ds, NeighborhoodSpec.knn(9)).limit == 0.6


def test_linear_1d_problem_estimate(backend):
    ds = gen_linear_1d(20_000, seed=0)
    report = classifiability(ds, NeighborhoodSpec.knn(64))
    assert abs(report.limit - 0.75) <= 0.02


def test_report_invariants():
    rng = np.random.default_rng(7)
    for n_classes in (2, 3, 5):
        ds = random_dataset(rng, 300, n_classes=n_classes)
        for spec in (NeighborhoodSpec.knn(5), NeighborhoodSpec.radius(0.2)):
            r = classifiability(ds, spec)
            H = r.per_point_entropy
            assert abs(r.limit - (1.0 - math.fsum(H) / len(H))) <= 1e-12
            assert H.min() >= 0.0 and H.max() <= 1.0 - 1.0 / n_classes + 1e-15
            assert 1.0 / n_classes <= r.limit <= 1.0
            assert r.per_point_entropy.shape == (ds.n,)


def test_empty_neighborhoods_counted():
    ds = make_dataset(np.array([[0.0], [1.0], [5.0], [5.1], [5.2]]), [0, 1, 0, 1, 1])
    r = classifiability(ds, NeighborhoodSpec.radius(0.15))
    assert r.empty_neighborhood_count == 2
    assert r.per_point_entropy.tolist() == [0.0, 0.0, 0.0, 0.5, 0.0]
    assert r.limit == 0.9


def test_k_too_large():
    ds = random_dataset(np.random.default_rng(0), 10)
    with pytest.raises(KTooLarge):
        classifiability(ds, NeighborhoodSpec.knn(10))


def test_label_permutation_equivariance():
    rng = np.random.default_rng(21)
    ds = random_dataset(rng, 400, n_classes=4)
    pi = np.array([3, 1, 0, 2])
    relabeled = make_dataset(ds.features, pi[ds.labels], 4)
    for spec in (NeighborhoodSpec.knn(9), NeighborhoodSpec.radius(0.3)):
        a = classifiability(ds, spec)
        b = classifiability(relabeled, spec)
        assert a.limit == b.limit
        assert np.array_equal(a.per_point_entropy, b.per_point_entropy)


def _dyadic(rng, n, d):
    return rng.integers(-512, 512, size=(n, d)) / 1024.0


@pytest.mark.parametrize("metric", list(MetricKind))
def test_column_permutation_invariance(metric):
    rng = np.random.default_rng(31)
    X = _dyadic(rng, 300, 3) if metric is MetricKind.HAMMING else rng.normal(size=(300, 3))
    y = rng.integers(0, 2, 300)
    a = make_dataset(X, y)
    b = make_dataset(X[:, [2, 0, 1]], y)
    spec = NeighborhoodSpec.knn(8, metric)
    assert classifiability(a, spec).limit == classifiability(b, spec).limit


@pytest.mark.parametrize("metric", ["l1", "l2", "chebyshev", "hamming"])
def test_translation_invariance(metric):
    rng = np.random.default_rng(32)
    X = _dyadic(rng, 300, 2)
    y = rng.integers(0, 2, 300)
    a, b = make_dataset(X, y), make_dataset(X + 3.0, y)
    for spec in (NeighborhoodSpec.knn(8, metric), NeighborhoodSpec.radius(0.1, metric)):
        assert classifiability(a, spec).limit == classifiability(b, spec).limit


def test_canberra_braycurtis_are_not_translation_invariant():
    # documented: both normalize by coordinate magnitudes
    rng = np.random.default_rng(33)
    X = rng.normal(size=(400, 2))
    y = (X[:, 0] > 0).astype(int)
    for metric in ("canberra", "braycurtis"):
        spec = NeighborhoodSpec.knn(8, metric)
        a = classifiability(make_dataset(X, y), spec).limit
        b = classifiability(make_dataset(X + 5.0, y), spec).limit
        assert a != b


@pytest.mark.parametrize("metric", ["l1", "l2", "chebyshev", "canberra", "braycurtis"])
def test_uniform_scaling_invariance(metric):
    rng = np.random.default_rng(34)
    X = rng.normal(size=(300, 3))
    y = rng.integers(0, 2, 300)
    spec = NeighborhoodSpec.knn(8, metric)
    base = classifiability(make_dataset(X, y), spec).limit
    assert classifiability(make_dataset(4.0 * X, y), spec).limit == base
    assert classifiability(make_dataset(2.5 * X, y), spec).limit == base


@pytest.mark.parametrize("metric", list(MetricKind))
def test_matches_reference_small(metric):
    rng = np.random.default_rng(40)
    ds = random_dataset(rng, 150, n_classes=3, integer=metric is MetricKind.HAMMING)
    for spec in (NeighborhoodSpec.knn(6, metric), NeighborhoodSpec.radius(0.7, metric)):
        a = classifiability(ds, spec)
        b = reference_estimate(ds, spec)
        assert a.limit == b.limit
        assert np.array_equal(a.per_point_entropy, b.per_point_entropy)
        assert np.array_equal(a.support_sizes, b.support_sizes)
        c = classifiability(ds, spec, full_entropy=True)
        d = reference_estimate(ds, spec, full_entropy_values=True)
        assert c.limit == d.limit
        assert np.array_equal(c.per_point_entropy, d.per_point_entropy)


def test_metric_sweep_picks_max():
    ds = random_dataset(np.random.default_rng(3), 200)
    reports, best = metric_sweep(ds, lambda m: NeighborhoodSpec.knn(7, m))
    assert len(reports) == 6
    assert reports[best].limit == max(r.limit for r in reports.values())


# ------------------------------------------------------------ entropy map


def test_entropy_map_separable_and_shape():
    ds = gen_blobs(300, centers=[(0, 0), (20, 20)], noise=0.5, seed=2)
    emap = entropy_map(ds, NeighborhoodSpec.knn(10))
    assert len(emap) == ds.n == len(list(emap.records()))
    assert not emap.entropy.any()


def test_entropy_map_matches_report_and_overlap_level():
    rng = np.random.default_rng(4)
    ds = make_dataset(rng.random((3000, 2)), rng.integers(0, 2, 3000))
    spec = NeighborhoodSpec.knn(200)
    emap = entropy_map(ds, spec)
    assert np.array_equal(emap.entropy, classifiability(ds, spec).per_point_entropy)
    # interleaved uniform classes: local majority near 1/2, so entropies near 0.5
    assert abs(float(np.mean(emap.entropy)) - 0.5) < 0.05
    rec = next(emap.records())
    assert set(rec) == {"index", "label", "entropy", "neighborhood_size", "coordinates"}


# -------------------------------------------------------------- resampling


def test_stratified_subsample_preserves_proportions():
    rng = np.random.default_rng(0)
    ds = make_dataset(np.zeros((100, 1)), [0] * 70 + [1] * 20 + [2] * 10, 3)
    rows = stratified_subsample(ds, 80, rng)
    assert rows.size == 80 and np.unique(rows).size == 80
    assert np.bincount(ds.labels[rows]).tolist() == [56, 16, 8]


def test_jackknife_separable():
    ds = gen_blobs(200, centers=[(0, 0), (10, 10)], noise=0.1, seed=3)
    rep = jackknife(ds, NeighborhoodSpec.knn(8), fraction=0.8, rounds=10, seed=1)
    assert rep.rounds == 10 and len(rep.subsample_limits) == 10
    assert rep.max_limit == rep.mean_limit == 1.0 and rep.std_limit == 0.0


def test_jackknife_overlapped_and_reproducible():
    rng = np.random.default_rng(5)
    ds = make_dataset(rng.random((2000, 2)), rng.integers(0, 2, 2000))
    spec = NeighborhoodSpec.knn(64)
    rep = jackknife(ds, spec, seed=9)
    assert rep.max_limit == max(rep.subsample_limits)
    assert all(0.5 <= v <= 1.0 for v in rep.subsample_limits)
    assert rep.max_limit >= 0.5 - 3 * rep.std_limit
    assert abs(rep.mean_limit - 0.5) < 0.05
    assert jackknife(ds, spec, seed=9) == rep


def test_jackknife_too_small():
    ds = random_dataset(np.random.default_rng(0), 20)
    with pytest.raises(SubsampleTooSmall):
        jackknife(ds, NeighborhoodSpec.knn(16), fraction=0.8)


def test_sweep_identity_and_shape():
    ds = random_dataset(np.random.default_rng(6), 300)
    spec = NeighborhoodSpec.knn(7)
    curve = subsample_sweep(ds, spec, [1.0], repeats=1, seed=0)
    assert curve[0].mean_limit == classifiability(ds, spec).limit
    curve = subsample_sweep(ds, spec, [0.3, 0.6, 1.0], repeats=3, seed=0)
    assert [pt.proportion for pt in curve] == [0.3, 0.6, 1.0]


@pytest.mark.slow
def test_sweep_stability_on_linear_problem():
    ds = gen_linear_1d(20_000, seed=3)
    curve = subsample_sweep(ds, NeighborhoodSpec.knn(64), [0.5, 1.0], repeats=3, seed=0)
    assert abs(curve[1].mean_limit - curve[0].mean_limit) <= 0.02
    assert abs(curve[1].mean_limit - 0.75) <= 0.02


# ------------------------------------------------------- over-classification


@pytest.mark.parametrize("res, points, N, minimum, over", [
    ((4, 4, 3, 3), 2880, 144, 2880, False),
    ((4, 4, 3, 3), 2879, 144, 2880, True),
    ((1,), 0, 1, 20, True),
])
def test_overclass(res, points, N, minimum, over):
    rep = overclass_check(res, points)
    assert (rep.potential_classes, rep.min_points, rep.over_classified) == (N, minimum, over)


def test_overclass_rejects_zero_resolution():
    with pytest.raises(ValueError):
        overclass_check((3, 0), 10)
