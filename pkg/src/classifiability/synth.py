"""Seeded generators for synthetic classification problems.

Every generator is a pure function of its arguments: the same seed gives the
same dataset, row order included.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ClassTable, LabeledDataset, validate_dataset
from .errors import TooManyClusters

KINDS = ("circles", "moons", "blobs", "linear1d", "overlap1d", "madelon")


def _finish(X, y, n_classes, rng):
    order = rng.permutation(len(y))
    return validate_dataset(X[order], y[order], ClassTable.numbered(n_classes))


def _split_evenly(n, parts):
    sizes = np.full(parts, n // parts, dtype=np.int64)
    sizes[: n % parts] += 1
    return sizes


def _check_n(n, minimum=2):
    if n < minimum:
        raise ValueError(f"need at least {minimum} points, got {n}")


def _check_noise(noise):
    if noise < 0:
        raise ValueError(f"noise must be non-negative, got {noise}")


def gen_circles(n: int, noise: float = 0.0, radius_ratio: float = 0.5, seed: int = 0) -> LabeledDataset:
    """Two concentric circles: class 0 on radius 1, class 1 on ``radius_ratio``."""
    _check_n(n)
    _check_noise(noise)
    if not 0 < radius_ratio < 1:
        raise ValueError("radius_ratio must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0.0, 2 * np.pi, n_out, endpoint=False)
    t_in = np.linspace(0.0, 2 * np.pi, n_in, endpoint=False)
    X = np.concatenate([
        np.column_stack([np.cos(t_out), np.sin(t_out)]),
        radius_ratio * np.column_stack([np.cos(t_in), np.sin(t_in)]),
    ])
    y = np.repeat([0, 1], [n_out, n_in])
    if noise > 0:
        X = X + rng.normal(scale=noise, size=X.shape)
    return _finish(X, y, 2, rng)


def gen_moons(n: int, noise: float = 0.0, seed: int = 0) -> LabeledDataset:
    """Two interleaving half circles.

    Class 0 is the upper unit half circle; class 1 is the lower half circle
    shifted to be centered at (1, 0.5).
    """
    _check_n(n)
    _check_noise(noise)
    rng = np.random.default_rng(seed)
    n_up = n // 2
    n_down = n - n_up
    t_up = np.linspace(0.0, np.pi, n_up)
    t_down = np.linspace(0.0, np.pi, n_down)
    X = np.concatenate([
        np.column_stack([np.cos(t_up), np.sin(t_up)]),
        np.column_stack([1.0 - np.cos(t_down), 0.5 - np.sin(t_down)]),
    ])
    y = np.repeat([0, 1], [n_up, n_down])
    if noise > 0:
        X = X + rng.normal(scale=noise, size=X.shape)
    return _finish(X, y, 2, rng)


FOUR_BLOBS = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0))


def gen_blobs(n: int, centers=FOUR_BLOBS, noise: float = 0.1, seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian clusters, one class per center, near-equal counts."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.shape[0] < 2:
        raise ValueError("need at least two centers")
    _check_n(n, centers.shape[0])
    _check_noise(noise)
    rng = np.random.default_rng(seed)
    sizes = _split_evenly(n, centers.shape[0])
    y = np.repeat(np.arange(centers.shape[0]), sizes)
    X = centers[y] + rng.normal(scale=noise, size=(n, centers.shape[1]))
    return _finish(X, y, centers.shape[0], rng)


def gen_linear_1d(n: int, seed: int = 0) -> LabeledDataset:
    """Class densities 2x (class 0) and 2(1 - x) (class 1) on [0, 1], half the points each."""
    _check_n(n)
    rng = np.random.default_rng(seed)
    n0 = n // 2
    u = rng.random(n)
    x = np.sqrt(u)
    x[n0:] = 1.0 - x[n0:]
    y = np.repeat([0, 1], [n0, n - n0])
    return _finish(x[:, None], y, 2, rng)


def gen_overlap_uniform_1d(n: int, offset: float = 0.5, seed: int = 0) -> LabeledDataset:
    """Two unit-width uniforms, U[0, 1] and U[offset, offset + 1].

    With equal weights the Bayes limit is ``1 - overlap / 2`` where
    ``overlap = max(0, 1 - |offset|)``.
    """
    _check_n(n)
    rng = np.random.default_rng(seed)
    n0 = n // 2
    x = rng.random(n)
    x[n0:] += offset
    y = np.repeat([0, 1], [n0, n - n0])
    return _finish(x[:, None], y, 2, rng)


def overlap_uniform_limit(offset: float) -> float:
    return 1.0 - max(0.0, 1.0 - abs(offset)) / 2.0


def _hypercube_vertices(count, dim, rng):
    if dim <= 30:
        codes = rng.choice(2 ** dim, size=count, replace=False)
        return ((codes[:, None] >> np.arange(dim)) & 1).astype(np.float64)
    seen = set()
    rows = []
    while len(rows) < count:
        bits = rng.integers(0, 2, size=dim)
        key = bits.tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(bits)
    return np.asarray(rows, dtype=np.float64)


def gen_madelon_like(n: int, n_features: int = 20, n_informative: int = 5, n_redundant: int = 5,
                     n_classes: int = 2, clusters_per_class: int = 2, class_sep: float = 1.0,
                     flip_fraction: float = 0.01, seed: int = 0) -> LabeledDataset:
    """Gaussian clusters on hypercube vertices plus redundant and noise features.

    Columns are ordered informative, redundant (random linear combinations of
    the informative ones), then standard-normal noise. Finally ``flip_fraction``
    of the rows get a label drawn uniformly from all classes (the original class
    included), so on well separated clusters the best accuracy is
    ``(1 - q) + q / n_classes``.
    """
    _check_n(n)
    n_clusters = n_classes * clusters_per_class
    if n_classes < 2 or clusters_per_class < 1:
        raise ValueError("need at least two classes and one cluster per class")
    if n_informative < math.ceil(math.log2(n_clusters)):
        raise TooManyClusters(
            f"{n_clusters} clusters need at least {math.ceil(math.log2(n_clusters))} informative features"
        )
    if n_features < n_informative + n_redundant:
        raise ValueError("n_features must cover informative and redundant features")
    if not 0 <= flip_fraction <= 1:
        raise ValueError("flip_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    centers = (2.0 * _hypercube_vertices(n_clusters, n_informative, rng) - 1.0) * class_sep
    cluster = np.repeat(np.arange(n_clusters), _split_evenly(n, n_clusters))
    y = cluster % n_classes
    informative = centers[cluster] + rng.normal(size=(n, n_informative))
    mixing = 2.0 * rng.random((n_informative, n_redundant)) - 1.0
    redundant = informative @ mixing
    noise = rng.normal(size=(n, n_features - n_informative - n_redundant))
    X = np.hstack([informative, redundant, noise])
    n_flip = int(round(flip_fraction * n))
    if n_flip:
        rows = rng.choice(n, size=n_flip, replace=False)
        y = y.copy()
        y[rows] = rng.integers(0, n_classes, size=n_flip)
    return _finish(X, y, n_classes, rng)


def madelon_flip_limit(flip_fraction: float, n_classes: int) -> float:
    return (1.0 - flip_fraction) + flip_fraction / n_classes


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    n: int
    noise: float = 0.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator {self.kind!r}; expected one of {KINDS}")
        _check_n(self.n)
        _check_noise(self.noise)


def generate(spec: SynthSpec) -> LabeledDataset:
    p = dict(spec.params)
    if spec.kind == "circles":
        return gen_circles(spec.n, spec.noise, p.get("radius_ratio", 0.5), spec.seed)
    if spec.kind == "moons":
        return gen_moons(spec.n, spec.noise, spec.seed)
    if spec.kind == "blobs":
        return gen_blobs(spec.n, p.get("centers", FOUR_BLOBS), spec.noise, spec.seed)
    if spec.kind == "linear1d":
        return gen_linear_1d(spec.n, spec.seed)
    if spec.kind == "overlap1d":
        return gen_overlap_uniform_1d(spec.n, p.get("offset", 0.5), spec.seed)
    keys = ("n_features", "n_informative", "n_redundant", "n_classes", "clusters_per_class",
            "class_sep", "flip_fraction")
    return gen_madelon_like(spec.n, seed=spec.seed, **{k: p[k] for k in keys if k in p})
