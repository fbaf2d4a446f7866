"""Neighborhood queries over a labeled dataset.

A neighborhood never contains the query row itself (other rows with the same
coordinates are kept). Radius neighborhoods use strict ``distance < theta``.
k-nearest neighborhoods are ordered by (distance, row index), so ties at the
k-th distance go to the lower row index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _accel, _kernels
from .core import LabeledDataset, round_half_up
from .errors import DatasetTooSmall, IndexOutOfRange, KTooLarge
from .metrics import MetricKind, distances_to

# relative slack on KD-tree radii; candidates are re-filtered with exact distances
_TREE_SLACK = 1e-9
# beyond these sizes candidate lists cost more than a compiled full scan
_TREE_MAX_CANDIDATES = 1 << 24
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True, eq=False)
class NeighborList:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return self.indices.shape[0]


def _check_query(dataset, query_index):
    if not 0 <= query_index < dataset.n:
        raise IndexOutOfRange(f"query index {query_index} outside [0, {dataset.n})")


def _check_k(k, n):
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > n - 1:
        raise KTooLarge(f"k={k} exceeds n-1={n - 1}")


def _ordered(idx, dist):
    order = np.lexsort((idx, dist))
    return NeighborList(idx[order], dist[order])


def neighbors_radius(dataset: LabeledDataset, query_index: int, theta: float, metric) -> NeighborList:
    """Rows strictly closer than ``theta`` to row ``query_index``, sorted by (distance, index)."""
    _check_query(dataset, query_index)
    if not theta > 0:
        raise ValueError(f"radius must be positive, got {theta}")
    dist = distances_to(metric, dataset.features, dataset.features[query_index])
    keep = dist < theta
    keep[query_index] = False
    idx = np.flatnonzero(keep)
    return _ordered(idx, dist[idx])


def neighbors_k(dataset: LabeledDataset, query_index: int, k: int, metric) -> NeighborList:
    """The ``k`` nearest rows to row ``query_index`` (brute force)."""
    _check_query(dataset, query_index)
    _check_k(k, dataset.n)
    dist = distances_to(metric, dataset.features, dataset.features[query_index])
    idx = np.delete(np.arange(dataset.n), query_index)
    dist = dist[idx]
    order = np.lexsort((idx, dist))[:k]
    return NeighborList(idx[order], dist[order])


def k_from_fraction(n: int, fraction: float, k_min: int = 6, k_max: int = 32) -> int:
    """Neighbor count as a fraction of the dataset size, clipped to ``[k_min, min(k_max, n-1)]``."""
    if n < 2:
        raise DatasetTooSmall("need at least two points")
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"invalid clip range [{k_min}, {k_max}]")
    k = round_half_up(fraction * n)
    return max(k_min, min(k, k_max, n - 1)) if k_min <= n - 1 else n - 1


class NeighborIndex:
    """Neighbor search structure for one dataset and metric.

    L1, L2 and Chebyshev use a KD-tree to produce candidate sets, which are then
    re-scored with the exact distance kernels; the answers are therefore
    identical to brute force. Other metrics (or ``brute_force=True``) scan all
    rows.
    """

    def __init__(self, dataset: LabeledDataset, metric, brute_force: bool = False):
        self.dataset = dataset
        self.metric = MetricKind.parse(metric)
        self._p = None if brute_force else self.metric.tree_p
        self._tree = cKDTree(dataset.features) if self._p is not None else None
        self._order = None

    @property
    def backend(self) -> str:
        return "brute" if self._tree is None else "kdtree"

    def __repr__(self):
        return f"NeighborIndex(n={self.dataset.n}, metric={self.metric.value}, backend={self.backend})"

    # -- candidate generation

    def _ball_csr(self, points, radii):
        lengths = self._tree.query_ball_point(points, radii, p=self._p, return_length=True)
        total = int(np.sum(lengths))
        if total > _TREE_MAX_CANDIDATES or total > len(points) * self.dataset.n // 4:
            return None
        lists = self._tree.query_ball_point(points, radii, p=self._p, return_sorted=True)
        lengths = np.fromiter((len(row) for row in lists), dtype=np.int64, count=len(lists))
        ptr = np.zeros(len(lists) + 1, dtype=np.int64)
        np.cumsum(lengths, out=ptr[1:])
        idx = np.fromiter((j for row in lists for j in row), dtype=np.int64, count=int(ptr[-1]))
        return ptr, idx

    def _radius_candidates(self, points, theta):
        if self._tree is None:
            return None
        return self._ball_csr(points, theta * (1.0 + _TREE_SLACK))

    def _knn_candidates(self, points, k, self_in_data=True):
        """Candidate sets guaranteed to contain each point's k nearest rows.

        The tree's own k-nearest answer is used directly when its last
        returned distance clears the k-th by more than the rounding slack;
        the remaining rows (boundary ties) fall back to a ball query.
        """
        if self._tree is None:
            return None
        n = self.dataset.n
        need = k + 1 if self_in_data else k
        kk = min(need + max(2, k // 8), n)
        m = len(points)
        dist, idx = self._tree.query(points, k=kk, p=self._p)
        dist = np.asarray(dist, dtype=np.float64).reshape(m, kk)
        idx = np.asarray(idx, dtype=np.int64).reshape(m, kk)
        if kk == n:
            safe = np.ones(m, dtype=bool)
        else:
            safe = dist[:, need - 1] * (1.0 + _TREE_SLACK) < dist[:, -1] * (1.0 - _TREE_SLACK)
        if safe.all():
            return np.arange(m + 1, dtype=np.int64) * kk, idx.ravel()
        unsafe = np.flatnonzero(~safe)
        ball = self._ball_csr(points[unsafe], dist[unsafe, -1] * (1.0 + _TREE_SLACK))
        if ball is None:
            return None
        lengths = np.full(m, kk, dtype=np.int64)
        lengths[unsafe] = np.diff(ball[0])
        ptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(lengths, out=ptr[1:])
        out = np.empty(int(ptr[-1]), dtype=np.int64)
        keep = np.repeat(safe, lengths)
        out[keep] = idx[safe].ravel()
        out[~keep] = ball[1]
        return ptr, out

    # -- whole-dataset queries

    def _all(self):
        X = self.dataset.features
        return X, np.arange(self.dataset.n, dtype=np.int64)

    def radius_counts(self, theta: float) -> np.ndarray:
        """(n, n_classes) label counts of every row's radius neighborhood."""
        X, ex = self._all()
        cand = self._radius_candidates(X, theta)
        return _kernels.radius_counts(X, X, self.dataset.labels, self.dataset.n_classes,
                                      theta, self.metric, exclude=ex, candidates=cand)

    def _sorted_windows(self, k):
        # one-dimensional data: neighbors are contiguous in sorted order
        if self._tree is None or self.dataset.d != 1 or not _accel.numba_enabled():
            return None
        if self._order is None:
            self._order = np.argsort(self.dataset.features[:, 0], kind="stable")
        xs = np.ascontiguousarray(self.dataset.features[self._order, 0])
        lo, hi = _kernels.sorted_windows_1d(xs, k, _TREE_SLACK)
        if int(np.sum(hi - lo)) > max(_TREE_MAX_CANDIDATES, 4 * (k + 1) * self.dataset.n):
            return None
        where = np.empty_like(self._order)
        where[self._order] = np.arange(self.dataset.n)
        return lo[where], hi[where]

    def _window_candidates(self, windows, lo, hi):
        start, stop = windows[0][lo:hi], windows[1][lo:hi]
        lengths = stop - start
        ptr = np.zeros(hi - lo + 1, dtype=np.int64)
        np.cumsum(lengths, out=ptr[1:])
        pos = np.repeat(start - ptr[:-1], lengths) + np.arange(ptr[-1])
        return ptr, self._order[pos]

    def _knn_run(self, kernel, Q, k, exclude, width):
        # tree candidates are materialized per chunk to bound memory
        n = self.dataset.n
        step = n if self._tree is None else max(1, _CHUNK_ELEMS // (k + 16))
        windows = self._sorted_windows(k) if exclude is not None else None
        parts = []
        for lo in range(0, len(Q), step):
            hi = min(lo + step, len(Q))
            ex = None if exclude is None else exclude[lo:hi]
            if windows is not None:
                cand = self._window_candidates(windows, lo, hi)
            else:
                cand = self._knn_candidates(Q[lo:hi], k, self_in_data=exclude is not None)
            parts.append(kernel(Q[lo:hi], ex, cand))
        return np.concatenate(parts) if parts else np.empty((0, width))

    def knn_counts(self, k: int) -> np.ndarray:
        """(n, n_classes) label counts of every row's k nearest neighbors."""
        _check_k(k, self.dataset.n)
        X, ex = self._all()
        ds = self.dataset
        return self._knn_run(
            lambda Q, e, c: _kernels.knn_counts(Q, X, ds.labels, ds.n_classes, k, self.metric,
                                                exclude=e, candidates=c),
            X, k, ex, ds.n_classes)

    def knn_distances(self, k: int) -> np.ndarray:
        """(n, k) sorted distances from every row to its k nearest neighbors."""
        _check_k(k, self.dataset.n)
        X, ex = self._all()
        return self._knn_run(
            lambda Q, e, c: _kernels.knn_distances(Q, X, k, self.metric, exclude=e, candidates=c),
            X, k, ex, k)

    # -- external queries (no self-exclusion)

    def query_knn_counts(self, Q, k: int) -> np.ndarray:
        if not 1 <= k <= self.dataset.n:
            raise KTooLarge(f"k={k} must lie in [1, {self.dataset.n}]")
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        ds = self.dataset
        return self._knn_run(
            lambda q, e, c: _kernels.knn_counts(q, ds.features, ds.labels, ds.n_classes, k,
                                                self.metric, candidates=c),
            Q, k, None, ds.n_classes).astype(np.int64, copy=False)

    def query_radius_counts(self, Q, theta: float) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        cand = self._radius_candidates(Q, theta)
        return _kernels.radius_counts(Q, self.dataset.features, self.dataset.labels,
                                      self.dataset.n_classes, theta, self.metric, candidates=cand)

    # -- single-row queries, NeighborList output

    def radius(self, query_index: int, theta: float) -> NeighborList:
        _check_query(self.dataset, query_index)
        if self._tree is None:
            return neighbors_radius(self.dataset, query_index, theta, self.metric)
        x = self.dataset.features[query_index]
        cand = np.asarray(self._tree.query_ball_point(x, theta * (1.0 + _TREE_SLACK), p=self._p),
                          dtype=np.int64)
        cand = cand[cand != query_index]
        dist = distances_to(self.metric, self.dataset.features[cand], x)
        keep = dist < theta
        return _ordered(cand[keep], dist[keep])

    def knn(self, query_index: int, k: int) -> NeighborList:
        _check_query(self.dataset, query_index)
        _check_k(k, self.dataset.n)
        if self._tree is None:
            return neighbors_k(self.dataset, query_index, k, self.metric)
        x = self.dataset.features[query_index]
        found = self._knn_candidates(x[None, :], k)
        if found is None:
            return neighbors_k(self.dataset, query_index, k, self.metric)
        cand = found[1][found[1] != query_index]
        dist = distances_to(self.metric, self.dataset.features[cand], x)
        order = np.lexsort((cand, dist))[:k]
        return NeighborList(cand[order], dist[order])


def build_index(dataset: LabeledDataset, metric, brute_force: bool = False) -> NeighborIndex:
    return NeighborIndex(dataset, metric, brute_force=brute_force)


def threshold_from_fraction(dataset: LabeledDataset, fraction: float, metric,
                            brute_force: bool = False) -> float:
    """Radius heuristic: mean over points of the mean distance to their
    ``m = max(1, round(fraction * n))`` nearest neighbors, labels ignored."""
    n = dataset.n
    if n < 2:
        raise DatasetTooSmall("need at least two points to derive a threshold")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    m = min(max(1, round_half_up(fraction * n)), n - 1)
    dists = build_index(dataset, metric, brute_force).knn_distances(m)
    per_point = [math.fsum(row) / m for row in dists.tolist()]
    return math.fsum(per_point) / n
