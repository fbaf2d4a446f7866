"""Foundational data types shared by every other module."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyClass,
    EmptyDataset,
    KTooLarge,
    LabelOutOfRange,
    NonFiniteFeature,
)
from .metrics import MetricKind


@dataclass(frozen=True)
class ClassTable:
    """Ordered class names; class ``i`` is ``names[i]``."""

    names: tuple

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        if not names:
            raise EmptyDataset("class table is empty")
        if any(n == "" for n in names):
            raise ValueError("class names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate class names in {names!r}")
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.names)

    def index(self, name) -> int:
        return self.names.index(str(name))

    @classmethod
    def numbered(cls, n_classes: int) -> "ClassTable":
        return cls(tuple(str(i) for i in range(n_classes)))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """n x d float64 features, n integer labels and the class table.

    Use :func:`validate_dataset` to build one from untrusted input.
    """

    features: np.ndarray
    labels: np.ndarray
    classes: ClassTable

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return validate_dataset(self.features[idx], self.labels[idx], self.classes)

    def __repr__(self):
        return f"LabeledDataset(n={self.n}, d={self.d}, classes={list(self.classes.names)})"


def validate_dataset(features, labels, classes) -> LabeledDataset:
    """Check and freeze raw arrays into a :class:`LabeledDataset`."""
    if not isinstance(classes, ClassTable):
        classes = ClassTable(tuple(classes))
    X = np.array(features, dtype=np.float64, order="C", copy=True)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyDataset(f"need at least one row and one column, got shape {X.shape}")
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"{y.size} labels for {X.shape[0]} feature rows")
    if y.dtype.kind not in "iu":
        if y.dtype.kind == "f" and np.all(np.isfinite(y)) and np.all(y == np.round(y)):
            y = y.astype(np.int64)
        else:
            raise LabelOutOfRange("labels must be integer class indices")
    y = y.astype(np.int64, copy=True)
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        raise NonFiniteFeature(int(bad[0, 0]), int(bad[0, 1]))
    if y.min() < 0 or y.max() >= len(classes):
        raise LabelOutOfRange(
            f"labels must lie in [0, {len(classes) - 1}], got range [{y.min()}, {y.max()}]"
        )
    counts = np.bincount(y, minlength=len(classes))
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClass(f"class {classes.names[empty[0]]!r} has no samples")
    X.setflags(write=False)
    y.setflags(write=False)
    return LabeledDataset(X, y, classes)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def class_proportions(dataset: LabeledDataset) -> np.ndarray:
    return dataset.class_counts() / dataset.n


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Either a radius ``theta`` or a neighbor count ``k``, plus a metric.

    Build through :meth:`radius` or :meth:`knn`.
    """

    theta: Optional[float] = None
    k: Optional[int] = None
    metric: MetricKind = MetricKind.L2

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        if (self.theta is None) == (self.k is None):
            raise ValueError("exactly one of theta or k must be given")
        if self.theta is not None:
            theta = float(self.theta)
            if not (theta > 0.0) or math.isnan(theta):
                raise ValueError(f"radius must be positive, got {self.theta}")
            object.__setattr__(self, "theta", theta)
        else:
            if int(self.k) != self.k or self.k < 1:
                raise ValueError(f"k must be a positive integer, got {self.k}")
            object.__setattr__(self, "k", int(self.k))

    @classmethod
    def radius(cls, theta, metric=MetricKind.L2):
        return cls(theta=theta, metric=metric)

    @classmethod
    def knn(cls, k, metric=MetricKind.L2):
        return cls(k=k, metric=metric)

    @property
    def mode(self) -> str:
        return "radius" if self.theta is not None else "knn"

    def check(self, n: int) -> None:
        if self.k is not None and self.k > n - 1:
            raise KTooLarge(f"k={self.k} needs at least {self.k + 1} points, dataset has {n}")

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "metric": self.metric.value}
        if self.theta is not None:
            out["radius"] = self.theta
        else:
            out["k"] = self.k
        return out


@dataclass(frozen=True, eq=False)
class ClassProbabilities:
    """Local class proportions. ``support_size == 0`` marks an empty neighborhood
    and then ``probs`` is all zero."""

    probs: np.ndarray
    support_size: int

    @property
    def is_empty(self) -> bool:
        return self.support_size == 0

    @classmethod
    def from_counts(cls, counts) -> "ClassProbabilities":
        counts = np.asarray(counts)
        total = int(counts.sum())
        if total == 0:
            return cls(np.zeros(counts.shape[0]), 0)
        return cls(counts / total, total)


@dataclass(frozen=True, eq=False)
class EstimateReport:
    limit: float
    per_point_entropy: np.ndarray
    class_proportions: np.ndarray
    empty_neighborhood_count: int
    config: NeighborhoodSpec
    n: int
    d: int
    support_sizes: Optional[np.ndarray] = field(default=None, repr=False)
    classes: Sequence[str] = ()

    def to_dict(self) -> dict:
        return {
            "limit": self.limit,
            "n": self.n,
            "d": self.d,
            "classes": list(self.classes),
            "class_proportions": [float(p) for p in self.class_proportions],
            "config": self.config.to_dict(),
            "empty_neighborhood_count": int(self.empty_neighborhood_count),
        }
