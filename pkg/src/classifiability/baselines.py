"""Neighbor-based reference classifiers and a repeated-split evaluation harness.

These exist to compare observed test accuracy against the estimated limit.
Queries come from a disjoint test partition, so no self-exclusion applies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LabeledDataset, round_half_up
from .errors import DegenerateSplit, KTooLarge
from .metrics import MetricKind
from .neighbors import build_index


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2.0 / 3.0
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "knn"
    k: int = 5
    theta: Optional[float] = None
    metric: MetricKind = MetricKind.L2

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        if self.kind not in ("knn", "radius"):
            raise ValueError(f"unknown classifier {self.kind!r}")
        if self.kind == "radius" and not (self.theta and self.theta > 0):
            raise ValueError("the radius classifier needs a positive theta")


def _majority(counts):
    # argmax keeps the first maximum, i.e. the smallest class index
    return np.argmax(counts, axis=1)


def knn_predict_many(train: LabeledDataset, k: int, metric, Q, index=None) -> np.ndarray:
    if not 1 <= k <= train.n:
        raise KTooLarge(f"k={k} must lie in [1, {train.n}]")
    index = index or build_index(train, metric)
    return _majority(index.query_knn_counts(Q, k))


def knn_predict(train: LabeledDataset, k: int, metric, query) -> int:
    """Majority label among the ``k`` nearest training rows (ties to the smaller class index)."""
    return int(knn_predict_many(train, k, metric, np.atleast_2d(query))[0])


def radius_predict_many(train: LabeledDataset, theta: float, metric, Q, fallback: int,
                        index=None) -> np.ndarray:
    if not theta > 0:
        raise ValueError(f"radius must be positive, got {theta}")
    index = index or build_index(train, metric)
    counts = index.query_radius_counts(Q, theta)
    pred = _majority(counts)
    pred[counts.sum(axis=1) == 0] = fallback
    return pred


def radius_predict(train: LabeledDataset, theta: float, metric, query, fallback: int) -> int:
    """Majority label strictly within ``theta``; ``fallback`` when the ball is empty."""
    return int(radius_predict_many(train, theta, metric, np.atleast_2d(query), fallback)[0])


def split_indices(dataset: LabeledDataset, split: SplitSpec, rng: np.random.Generator):
    """Disjoint (train, test) row indices, each sorted."""
    if split.stratified:
        train = []
        for c in range(dataset.n_classes):
            members = rng.permutation(np.flatnonzero(dataset.labels == c))
            train.append(members[: round_half_up(split.train_fraction * members.size)])
        train = np.sort(np.concatenate(train))
    else:
        train = np.sort(rng.permutation(dataset.n)[: round_half_up(split.train_fraction * dataset.n)])
    mask = np.zeros(dataset.n, dtype=bool)
    mask[train] = True
    test = np.flatnonzero(~mask)
    for part, name in ((train, "train"), (test, "test")):
        present = np.unique(dataset.labels[part]).size
        if present < dataset.n_classes:
            raise DegenerateSplit(f"{name} partition holds {present} of {dataset.n_classes} classes")
    return train, test


@dataclass(frozen=True)
class EvaluationReport:
    accuracies: tuple
    mean_accuracy: float
    std_accuracy: float
    config: ClassifierConfig
    split: SplitSpec

    def to_dict(self):
        return {
            "classifier": self.config.kind,
            "k": self.config.k if self.config.kind == "knn" else None,
            "radius": self.config.theta if self.config.kind == "radius" else None,
            "metric": self.config.metric.value,
            "train_fraction": self.split.train_fraction,
            "accuracies": list(self.accuracies),
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
        }


def evaluate(dataset: LabeledDataset, split: SplitSpec, config: ClassifierConfig,
             repeats: int = 10) -> EvaluationReport:
    """Test accuracy over ``repeats`` independent shuffled splits."""
    if repeats < 1:
        raise ValueError("repeats must be positive")
    rng = np.random.default_rng(split.seed)
    accuracies = []
    for _ in range(repeats):
        tr, te = split_indices(dataset, split, rng)
        train = dataset.subset(tr)
        Q = dataset.features[te]
        if config.kind == "knn":
            pred = knn_predict_many(train, config.k, config.metric, Q)
        else:
            fallback = int(np.argmax(train.class_counts()))
            pred = radius_predict_many(train, config.theta, config.metric, Q, fallback)
        accuracies.append(float(np.count_nonzero(pred == dataset.labels[te])) / te.size)
    mean = math.fsum(accuracies) / repeats
    std = math.sqrt(math.fsum((a - mean) ** 2 for a in accuracies) / repeats)
    return EvaluationReport(tuple(accuracies), mean, std, config, split)
