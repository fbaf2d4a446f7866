"""Classifiability-limit estimator.

For every point the local class proportions ``p`` are counted over its
neighborhood, the local entropy is ``H = 1 - max(p)`` (equivalently
``-sum p ln(p / rho)`` with ``rho = p * exp(1 - max p)``), and the limit is
``1 - mean(H)``. Empty radius neighborhoods count as ``H = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    ClassProbabilities,
    EstimateReport,
    LabeledDataset,
    NeighborhoodSpec,
    class_proportions,
    round_half_up,
)
from .errors import EmptyNeighborhood, SubsampleTooSmall
from .metrics import MetricKind
from .neighbors import NeighborIndex, NeighborList, build_index, k_from_fraction

# tolerance for the closed-form vs full-formula entropy cross-check
ENTROPY_IDENTITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RhoHat:
    values: np.ndarray


def local_probabilities(dataset: LabeledDataset, neighborhood: NeighborList) -> ClassProbabilities:
    counts = np.bincount(dataset.labels[np.asarray(neighborhood.indices, dtype=np.intp)],
                         minlength=dataset.n_classes)
    return ClassProbabilities.from_counts(counts)


def rho_hat(probs: ClassProbabilities) -> RhoHat:
    """Local invariant measure of a constant distribution: ``p * exp(1 - max p)``."""
    if probs.support_size == 0:
        raise EmptyNeighborhood("the invariant measure is undefined on an empty neighborhood")
    p = np.asarray(probs.probs, dtype=np.float64)
    return RhoHat(p * math.exp(1.0 - float(p.max())))


def full_entropy(p: Sequence[float]) -> float:
    """``-sum p ln(p / rho)`` evaluated term by term, with ``0 ln 0 = 0``."""
    p = [float(v) for v in p]
    scale = math.exp(1.0 - max(p))
    h = 0.0
    for v in p:
        if v > 0.0:
            h -= v * math.log(v / (v * scale))
    return h


def local_entropy(probs: ClassProbabilities, full: bool = False) -> float:
    if probs.support_size == 0:
        return 0.0
    if full:
        return full_entropy(probs.probs)
    return 1.0 - float(np.max(probs.probs))


def _check_full(closed, full):
    gap = np.max(np.abs(np.asarray(closed) - np.asarray(full)), initial=0.0)
    if gap > ENTROPY_IDENTITY_TOL:
        raise ArithmeticError(f"full entropy formula deviates from 1 - max p by {gap:.3e}")


def entropies_from_counts(counts: np.ndarray, full: bool = False):
    """Per-point entropies and support sizes from an (n, n_classes) count matrix."""
    counts = np.asarray(counts, dtype=np.int64)
    support = counts.sum(axis=1)
    top = counts.max(axis=1)
    nonempty = support > 0
    H = np.zeros(counts.shape[0])
    H[nonempty] = 1.0 - top[nonempty] / support[nonempty]
    if full:
        H_full = np.zeros_like(H)
        for i in np.flatnonzero(nonempty):
            H_full[i] = full_entropy((counts[i] / support[i]).tolist())
        _check_full(H, H_full)
        H = H_full
    return H, support


def limit_from_counts(top, support) -> float:
    """Mean local majority proportion, with empty neighborhoods counting as 1.

    Counts are grouped by support size and summed as integers, so a group
    contributes one correctly rounded quotient and the result does not depend on
    point order or on how the work was split.
    """
    top = np.asarray(top, dtype=np.int64)
    support = np.asarray(support, dtype=np.int64)
    n = top.shape[0]
    empty = int(np.count_nonzero(support == 0))
    terms = [float(empty)]
    nz = support > 0
    sizes, inverse = np.unique(support[nz], return_inverse=True)
    grouped = np.zeros(sizes.shape[0], dtype=np.int64)
    np.add.at(grouped, inverse, top[nz])
    for s, c in zip(sizes.tolist(), grouped.tolist()):
        terms.append(c / s)
    return math.fsum(terms) / n


def _counts(dataset, spec, index):
    if spec.mode == "knn":
        return index.knn_counts(spec.k)
    return index.radius_counts(spec.theta)


def _index_for(dataset, spec, brute_force, index):
    if index is not None:
        return index
    return build_index(dataset, spec.metric, brute_force=brute_force)


def classifiability(dataset: LabeledDataset, spec: NeighborhoodSpec, brute_force: bool = False,
                    full_entropy: bool = False, index: Optional[NeighborIndex] = None) -> EstimateReport:
    """Estimate the classifiability limit of ``dataset`` under ``spec``.

    ``full_entropy=True`` evaluates every local entropy with the logarithmic
    formula (after checking it against the closed form) and averages those
    values directly; use it for verification only.
    """
    spec.check(dataset.n)
    idx = _index_for(dataset, spec, brute_force, index)
    counts = _counts(dataset, spec, idx)
    H, support = entropies_from_counts(counts, full=full_entropy)
    if full_entropy:
        limit = 1.0 - math.fsum(H.tolist()) / dataset.n
    else:
        limit = limit_from_counts(counts.max(axis=1), support)
    return EstimateReport(
        limit=limit,
        per_point_entropy=H,
        class_proportions=class_proportions(dataset),
        empty_neighborhood_count=int(np.count_nonzero(support == 0)),
        config=spec,
        n=dataset.n,
        d=dataset.d,
        support_sizes=support,
        classes=dataset.classes.names,
    )


def auto_knn_spec(dataset: LabeledDataset, fraction: float = 0.015, metric=MetricKind.L2,
                  k_min: int = 6, k_max: int = 32) -> NeighborhoodSpec:
    return NeighborhoodSpec.knn(k_from_fraction(dataset.n, fraction, k_min, k_max), metric)


def metric_sweep(dataset: LabeledDataset, make_spec, metrics=tuple(MetricKind), brute_force=False):
    """Estimate under several metrics; returns ({metric: report}, best metric).

    ``make_spec(metric)`` builds the neighborhood spec for each metric. The best
    metric is the one with the highest limit (first in ``metrics`` order on ties).
    """
    reports = {}
    for metric in metrics:
        metric = MetricKind.parse(metric)
        reports[metric] = classifiability(dataset, make_spec(metric), brute_force=brute_force)
    best = max(reports, key=lambda m: reports[m].limit)
    return reports, best


# ------------------------------------------------------------- entropy map


@dataclass(frozen=True, eq=False)
class EntropyMap:
    """Per-point data for plotting: coordinates, label, entropy, neighborhood size."""

    features: np.ndarray
    labels: np.ndarray
    entropy: np.ndarray
    neighborhood_size: np.ndarray
    classes: tuple
    config: NeighborhoodSpec

    def __len__(self):
        return self.labels.shape[0]

    def records(self):
        for i in range(len(self)):
            yield {
                "index": i,
                "label": self.classes[self.labels[i]],
                "entropy": float(self.entropy[i]),
                "neighborhood_size": int(self.neighborhood_size[i]),
                "coordinates": self.features[i].tolist(),
            }


def entropy_map(dataset: LabeledDataset, spec: NeighborhoodSpec, brute_force: bool = False) -> EntropyMap:
    report = classifiability(dataset, spec, brute_force=brute_force)
    return EntropyMap(dataset.features, dataset.labels, report.per_point_entropy,
                      report.support_sizes, dataset.classes.names, spec)


# -------------------------------------------------------------- resampling


def stratified_subsample(dataset: LabeledDataset, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted row indices of a class-stratified draw without replacement.

    Per-class sizes follow the largest-remainder rule so they sum to ``size``;
    every class keeps at least one row.
    """
    counts = dataset.class_counts()
    n = dataset.n
    C = counts.shape[0]
    if size < C or size > n:
        raise SubsampleTooSmall(f"subsample of {size} rows cannot cover {C} classes from {n} rows")
    quota = counts * size / n
    alloc = np.floor(quota).astype(np.int64)
    alloc = np.maximum(alloc, 1)
    alloc = np.minimum(alloc, counts)
    short = size - int(alloc.sum())
    order = np.lexsort((np.arange(C), -(quota - np.floor(quota))))
    while short != 0:
        progressed = False
        for c in order:
            if short > 0 and alloc[c] < counts[c]:
                alloc[c] += 1
                short -= 1
                progressed = True
            elif short < 0 and alloc[c] > 1:
                alloc[c] -= 1
                short += 1
                progressed = True
            if short == 0:
                break
        if not progressed:
            raise SubsampleTooSmall(f"cannot allocate {size} rows across classes")
    picks = []
    for c in range(C):
        members = np.flatnonzero(dataset.labels == c)
        picks.append(rng.choice(members, size=int(alloc[c]), replace=False))
    return np.sort(np.concatenate(picks))


def _subsample_size(dataset, spec, fraction):
    size = round_half_up(fraction * dataset.n)
    if size < dataset.n_classes:
        raise SubsampleTooSmall(f"{size} rows cannot hold {dataset.n_classes} classes")
    if spec.mode == "knn" and size < spec.k + 1:
        raise SubsampleTooSmall(f"{size} rows are too few for k={spec.k}")
    return size


@dataclass(frozen=True)
class JackknifeReport:
    subsample_limits: tuple
    max_limit: float
    mean_limit: float
    std_limit: float
    rounds: int
    fraction: float

    def to_dict(self):
        return {
            "subsample_limits": list(self.subsample_limits),
            "max_limit": self.max_limit,
            "mean_limit": self.mean_limit,
            "std_limit": self.std_limit,
            "rounds": self.rounds,
            "fraction": self.fraction,
        }


def _mean_std(values):
    values = list(values)
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def jackknife(dataset: LabeledDataset, spec: NeighborhoodSpec, fraction: float = 0.8,
              rounds: int = 10, seed: int = 0, brute_force: bool = False) -> JackknifeReport:
    """Estimate on ``rounds`` stratified subsamples without replacement."""
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if rounds < 1:
        raise ValueError("rounds must be positive")
    size = _subsample_size(dataset, spec, fraction)
    rng = np.random.default_rng(seed)
    limits = []
    for _ in range(rounds):
        rows = stratified_subsample(dataset, size, rng)
        limits.append(classifiability(dataset.subset(rows), spec, brute_force=brute_force).limit)
    mean, std = _mean_std(limits)
    return JackknifeReport(tuple(limits), max(limits), mean, std, rounds, fraction)


@dataclass(frozen=True)
class SweepPoint:
    proportion: float
    mean_limit: float
    std_limit: float
    limits: tuple

    def to_dict(self):
        return {"proportion": self.proportion, "mean_limit": self.mean_limit,
                "std_limit": self.std_limit, "limits": list(self.limits)}


def subsample_sweep(dataset: LabeledDataset, spec: NeighborhoodSpec, proportions, repeats: int = 10,
                    seed: int = 0, brute_force: bool = False) -> list:
    """Mean and spread of the estimate over stratified subsamples at each proportion."""
    if repeats < 1:
        raise ValueError("repeats must be positive")
    rng = np.random.default_rng(seed)
    curve = []
    for prop in proportions:
        if not 0 < prop <= 1:
            raise ValueError(f"proportion must lie in (0, 1], got {prop}")
        size = _subsample_size(dataset, spec, prop)
        limits = []
        for _ in range(repeats):
            rows = stratified_subsample(dataset, size, rng)
            limits.append(classifiability(dataset.subset(rows), spec, brute_force=brute_force).limit)
        mean, std = _mean_std(limits)
        curve.append(SweepPoint(float(prop), mean, std, tuple(limits)))
    return curve


# ------------------------------------------------------ over-classification


@dataclass(frozen=True)
class OverclassReport:
    potential_classes: int
    resolutions: tuple
    min_points: int
    actual_points: int
    over_classified: bool

    def to_dict(self):
        return {
            "potential_classes": self.potential_classes,
            "resolutions": list(self.resolutions),
            "min_points": self.min_points,
            "actual_points": self.actual_points,
            "over_classified": self.over_classified,
        }


POINTS_PER_POTENTIAL_CLASS = 20


def overclass_check(resolutions, actual_points: int) -> OverclassReport:
    """Potential class count ``N = prod(resolutions)`` against the ``P >= 20 N`` rule."""
    res = tuple(int(r) for r in resolutions)
    if not res or any(r < 1 for r in res):
        raise ValueError(f"resolutions must be positive integers, got {resolutions!r}")
    N = math.prod(res)
    min_points = POINTS_PER_POTENTIAL_CLASS * N
    return OverclassReport(N, res, min_points, int(actual_points), int(actual_points) < min_points)
