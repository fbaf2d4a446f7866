import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from classifiability.core import NeighborhoodSpec
from classifiability.errors import DegenerateProblem
from classifiability.estimator import classifiability
from classifiability.oracle import (
    AnalyticProblem,
    bayes_limit,
    builtin_problem,
    from_families,
    load_problem,
    problem_from_dict,
    reference_estimate,
    sample_problem,
)

from conftest import make_dataset


def test_closed_form_limits():
    assert bayes_limit(builtin_problem("identical-uniform")) == pytest.approx(0.5, abs=1e-12)
    assert bayes_limit(builtin_problem("disjoint-uniform")) == pytest.approx(1.0, abs=1e-12)
    # integral of max(x, 1 - x) over [0, 1]
    assert bayes_limit(builtin_problem("linear1d")) == pytest.approx(0.75, abs=1e-12)
    # unit-width uniforms offset by 0.5 overlap on half their support
    assert bayes_limit(builtin_problem("overlap-uniform")) == pytest.approx(0.75, abs=1e-12)


def test_gaussian_pair_against_normal_cdf():
    # equal-variance Gaussians 1.5 apart: Bayes accuracy Phi(0.75)
    assert bayes_limit(builtin_problem("gaussians2d")) == pytest.approx(norm.cdf(0.75), abs=1e-4)


def test_swap_and_refinement_invariance():
    spec = {"bounds": [[-4, 5], [-4, 4]], "classes": [
        {"family": "gaussian", "mean": [0, 0], "sigma": 1.0},
        {"family": "gaussian", "mean": [1.5, 0.5], "sigma": 0.8},
    ]}
    coarse = problem_from_dict(spec, cells=[128, 128])
    fine = problem_from_dict(spec, cells=[256, 256])
    swapped = problem_from_dict({**spec, "classes": spec["classes"][::-1]}, cells=[128, 128])
    assert bayes_limit(swapped) == pytest.approx(bayes_limit(coarse), abs=1e-14)
    assert abs(bayes_limit(fine) - bayes_limit(coarse)) < 1e-3


def test_limit_bounds_on_random_tables():
    rng = np.random.default_rng(0)
    for _ in range(50):
        C = int(rng.integers(2, 5))
        tables = rng.random((C, 64)) * (rng.random((C, 64)) < 0.7)
        tables[:, 0] += 0.01
        w = rng.dirichlet(np.ones(C))
        fams = [{"family": "table", "values": t.tolist()} for t in tables]
        prob = from_families(fams, [[0, 1]], [64], w)
        c = bayes_limit(prob)
        assert w.max() - 1e-12 <= c <= 1.0 + 1e-12


def test_problem_validation():
    with pytest.raises(ValueError):
        AnalyticProblem([(0, 1)], [4], [0.5, 0.5], np.ones((2, 4)) * 2.0)
    with pytest.raises(DegenerateProblem):
        from_families([{"family": "uniform", "low": [2], "high": [3]},
                       {"family": "uniform"}], [[0, 1]], [16])
    with pytest.raises(ValueError):
        AnalyticProblem([(0, 1)], [4], [1.0], np.ones((1, 4)))


def test_problem_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({
        "bounds": [[0, 1]], "cells": [4], "weights": [0.25, 0.75],
        "classes": [{"name": "a", "family": "table", "values": [1, 1, 0, 0]},
                    {"name": "b", "family": "uniform"}],
    }))
    prob = load_problem(path)
    assert prob.names == ("a", "b") and prob.cells == (4,)
    # left half: max(0.25 * 2, 0.75) = 0.75; right half: 0.75
    assert bayes_limit(prob) == pytest.approx(0.75, abs=1e-12)


def test_sample_class_counts_binomial():
    ds = sample_problem(builtin_problem("identical-uniform"), 1000, seed=1)
    counts = ds.class_counts()
    assert np.all(np.abs(counts - 500) <= 4 * math.sqrt(1000 * 0.25))


def test_sample_support_and_determinism():
    prob = builtin_problem("disjoint-uniform")
    ds = sample_problem(prob, 500, seed=2)
    x = ds.features[:, 0]
    assert np.all(x[ds.labels == 0] <= 1.0) and np.all(x[ds.labels == 1] >= 1.0)
    again = sample_problem(prob, 500, seed=2)
    assert np.array_equal(ds.features, again.features) and np.array_equal(ds.labels, again.labels)


def test_sample_linear_density_moments():
    ds = sample_problem(builtin_problem("linear1d"), 20_000, seed=3)
    x0 = ds.features[ds.labels == 0, 0]
    # density 2x: mean 2/3, variance 1/18
    assert abs(x0.mean() - 2 / 3) <= 4 * math.sqrt(1 / 18 / x0.size)


def test_sample_2d_within_box():
    ds = sample_problem(builtin_problem("rings2d", cells=[64, 64]), 400, seed=0)
    assert ds.d == 2 and np.all(np.abs(ds.features) <= 2.0)


def test_reference_examples():
    rng = np.random.default_rng(1)
    ds = make_dataset(rng.random((10, 2)), [0] * 6 + [1] * 4)
    assert reference_estimate(ds, NeighborhoodSpec.radius(100.0)).limit == 0.6
    pure = make_dataset(np.array([[0.0], [0.1], [5.0], [5.1]]), [0, 0, 1, 1])
    assert reference_estimate(pure, NeighborhoodSpec.knn(1)).limit == 1.0


@pytest.mark.slow
def test_estimate_converges_to_bayes_limit():
    prob = builtin_problem("linear1d")
    target = bayes_limit(prob)
    errors = []
    for n in (500, 2000, 8000, 32000):
        k = math.ceil(n ** 0.7)
        errs = [abs(classifiability(sample_problem(prob, n, seed=s), NeighborhoodSpec.knn(k)).limit - target)
                for s in range(10)]
        errors.append((float(np.mean(errs)), float(np.std(errs))))
    for (m0, s0), (m1, _) in zip(errors, errors[1:]):
        assert m1 <= m0 + s0
    assert errors[-1][0] < errors[0][0]
