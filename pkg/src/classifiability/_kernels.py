"""Neighborhood kernels: compiled (numba) and pure-numpy implementations.

Every kernel answers queries ``Q`` against reference rows ``X``. ``exclude[i]``
is the reference row that query ``i`` must skip (its own index when the query
set is the dataset itself, -1 otherwise). Candidate lists in CSR form
(``cand_ptr``/``cand_idx``, any order within a row) restrict the search; an
empty ``cand_ptr`` means brute force over all rows.

Both implementations accumulate distance terms in column order, select
k-nearest sets by (distance, row index) and count labels with integers, so
their outputs are bit-identical.
"""
import numpy as np

from . import _accel
from ._accel import njit, prange
from .metrics import MetricKind, distances_to

_BLOCK_ELEMS = 1 << 22
_EMPTY = np.zeros(0, dtype=np.int64)


@njit(inline="always")
def _dist(metric, X, j, Q, qi):
    d = X.shape[1]
    acc = 0.0
    if metric == 0:
        for t in range(d):
            acc += abs(X[j, t] - Q[qi, t])
    elif metric == 1:
        for t in range(d):
            u = X[j, t] - Q[qi, t]
            acc += u * u
        acc = np.sqrt(acc)
    elif metric == 2:
        for t in range(d):
            u = abs(X[j, t] - Q[qi, t])
            if u > acc:
                acc = u
    elif metric == 3:
        for t in range(d):
            if X[j, t] != Q[qi, t]:
                acc += 1.0
    elif metric == 4:
        for t in range(d):
            den = abs(X[j, t]) + abs(Q[qi, t])
            if den > 0.0:
                acc += abs(X[j, t] - Q[qi, t]) / den
    else:
        den = 0.0
        for t in range(d):
            acc += abs(X[j, t] - Q[qi, t])
            den += abs(X[j, t] + Q[qi, t])
        if den > 0.0:
            acc = acc / den
        else:
            acc = 0.0
    return acc


@njit(inline="always")
def _span(qi, n, cand_ptr):
    if cand_ptr.shape[0] == 0:
        return 0, n
    return cand_ptr[qi], cand_ptr[qi + 1]


@njit(inline="always")
def _row(t, cand_ptr, cand_idx):
    if cand_ptr.shape[0] == 0:
        return t
    return cand_idx[t]


@njit(parallel=True)
def _radius_counts_nb(Q, X, y, n_classes, exclude, metric, theta, cand_ptr, cand_idx):
    nq = Q.shape[0]
    n = X.shape[0]
    counts = np.zeros((nq, n_classes), dtype=np.int64)
    for qi in prange(nq):
        lo, hi = _span(qi, n, cand_ptr)
        skip = exclude[qi]
        for t in range(lo, hi):
            j = _row(t, cand_ptr, cand_idx)
            if j != skip and _dist(metric, X, j, Q, qi) < theta:
                counts[qi, y[j]] += 1
    return counts


@njit(inline="always")
def _before(da, ia, db, ib):
    return da < db or (da == db and ia < ib)


@njit
def _sift_down(hd, hi_, size, pos):
    # max-heap on (distance, index)
    while True:
        left = 2 * pos + 1
        if left >= size:
            return
        big = left
        right = left + 1
        if right < size and _before(hd[left], hi_[left], hd[right], hi_[right]):
            big = right
        if _before(hd[pos], hi_[pos], hd[big], hi_[big]):
            hd[pos], hd[big] = hd[big], hd[pos]
            hi_[pos], hi_[big] = hi_[big], hi_[pos]
            pos = big
        else:
            return


@njit
def _sift_up(hd, hi_, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _before(hd[parent], hi_[parent], hd[pos], hi_[pos]):
            hd[pos], hd[parent] = hd[parent], hd[pos]
            hi_[pos], hi_[parent] = hi_[parent], hi_[pos]
            pos = parent
        else:
            return


@njit
def _knn_heap(Q, X, qi, skip, metric, k, cand_ptr, cand_idx, hd, hi_):
    """Fill (hd, hi_) with the k smallest (distance, index) pairs; returns the fill count."""
    lo, hi = _span(qi, X.shape[0], cand_ptr)
    size = 0
    for t in range(lo, hi):
        j = _row(t, cand_ptr, cand_idx)
        if j == skip:
            continue
        dj = _dist(metric, X, j, Q, qi)
        if size < k:
            hd[size] = dj
            hi_[size] = j
            _sift_up(hd, hi_, size)
            size += 1
        elif _before(dj, j, hd[0], hi_[0]):
            hd[0] = dj
            hi_[0] = j
            _sift_down(hd, hi_, size, 0)
    return size


@njit(parallel=True)
def _knn_counts_nb(Q, X, y, n_classes, exclude, metric, k, cand_ptr, cand_idx):
    nq = Q.shape[0]
    counts = np.zeros((nq, n_classes), dtype=np.int64)
    for qi in prange(nq):
        hd = np.empty(k)
        hi_ = np.empty(k, dtype=np.int64)
        size = _knn_heap(Q, X, qi, exclude[qi], metric, k, cand_ptr, cand_idx, hd, hi_)
        for t in range(size):
            counts[qi, y[hi_[t]]] += 1
    return counts


@njit(parallel=True)
def _knn_distances_nb(Q, X, exclude, metric, k, cand_ptr, cand_idx):
    nq = Q.shape[0]
    out = np.empty((nq, k))
    for qi in prange(nq):
        hd = np.empty(k)
        hi_ = np.empty(k, dtype=np.int64)
        _knn_heap(Q, X, qi, exclude[qi], metric, k, cand_ptr, cand_idx, hd, hi_)
        out[qi] = np.sort(hd)
    return out


@njit(parallel=True)
def sorted_windows_1d(xs, k, slack):
    """Windows [lo, hi) of sorted 1D values holding each point's k nearest.

    Walks outward from every position to find the k-th smallest gap, then
    widens the window by a relative ``slack`` so that any point the exact
    kernels could rank inside the k nearest is included.
    """
    n = xs.shape[0]
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    for p in prange(n):
        q = xs[p]
        left = p - 1
        right = p + 1
        far = 0.0
        for _ in range(k):
            if left < 0 or (right < n and xs[right] - q < q - xs[left]):
                far = xs[right] - q
                right += 1
            else:
                far = q - xs[left]
                left -= 1
        reach = far * (1.0 + slack)
        while left >= 0 and q - xs[left] <= reach:
            left -= 1
        while right < n and xs[right] - q <= reach:
            right += 1
        lo[p] = left + 1
        hi[p] = right
    return lo, hi


# ---------------------------------------------------------------- numpy path


def _blocks(nq, n):
    step = max(1, _BLOCK_ELEMS // max(n, 1))
    for lo in range(0, nq, step):
        yield lo, min(nq, lo + step)


def _block_distances(Q, X, metric, lo, hi):
    return distances_to(metric, X[None, :, :], Q[lo:hi, None, :])


def _knn_mask_np(D, k):
    # D has +inf at excluded positions; k never exceeds the finite count
    kth = np.partition(D, k - 1, axis=1)[:, k - 1:k]
    less = D < kth
    need = k - less.sum(axis=1, keepdims=True)
    eq = D == kth
    return less | (eq & (np.cumsum(eq, axis=1) <= need))


def _count_labels(mask, labels, n_classes):
    # labels is (n,) shared by every row, or (rows, n) gathered per row
    if labels.ndim == 1:
        labels = labels[None, :]
    out = np.zeros((mask.shape[0], n_classes), dtype=np.int64)
    for c in range(n_classes):
        out[:, c] = np.count_nonzero(mask & (labels == c), axis=1)
    return out


def _rows_np(Q, X, exclude, metric, cand_ptr, cand_idx):
    """Yield (query rows, candidate indices or None, distance block).

    Excluded positions carry +inf. Candidate rows are gathered into dense
    blocks of equal width and sorted by index, so ties resolve by index.
    """
    nq, n = Q.shape[0], X.shape[0]
    if cand_ptr.shape[0] == 0:
        for lo, hi in _blocks(nq, n):
            D = _block_distances(Q, X, metric, lo, hi)
            rows = np.arange(hi - lo)
            ex = exclude[lo:hi]
            ok = (ex >= 0) & (ex < n)
            D[rows[ok], ex[ok]] = np.inf
            yield slice(lo, hi), None, D
        return
    widths = np.diff(cand_ptr)
    for w in np.unique(widths):
        group = np.flatnonzero(widths == w)
        for lo, hi in _blocks(group.shape[0], int(w)):
            rows = group[lo:hi]
            idx = np.sort(cand_idx[cand_ptr[rows][:, None] + np.arange(w)], axis=1)
            D = distances_to(metric, X[idx], Q[rows][:, None, :])
            D[idx == exclude[rows][:, None]] = np.inf
            yield rows, idx, D


def _radius_counts_np(Q, X, y, n_classes, exclude, metric, theta, cand_ptr, cand_idx):
    counts = np.zeros((Q.shape[0], n_classes), dtype=np.int64)
    for sl, cand, D in _rows_np(Q, X, exclude, metric, cand_ptr, cand_idx):
        labels = y if cand is None else y[cand]
        counts[sl] = _count_labels(D < theta, labels, n_classes)
    return counts


def _knn_counts_np(Q, X, y, n_classes, exclude, metric, k, cand_ptr, cand_idx):
    counts = np.zeros((Q.shape[0], n_classes), dtype=np.int64)
    for sl, cand, D in _rows_np(Q, X, exclude, metric, cand_ptr, cand_idx):
        labels = y if cand is None else y[cand]
        counts[sl] = _count_labels(_knn_mask_np(D, k), labels, n_classes)
    return counts


def _knn_distances_np(Q, X, exclude, metric, k, cand_ptr, cand_idx):
    out = np.empty((Q.shape[0], k))
    for sl, _, D in _rows_np(Q, X, exclude, metric, cand_ptr, cand_idx):
        out[sl] = np.sort(np.partition(D, k - 1, axis=1)[:, :k], axis=1)
    return out


# ------------------------------------------------------------------ dispatch


def _prep(Q, X, exclude, candidates):
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if exclude is None:
        exclude = np.full(Q.shape[0], -1, dtype=np.int64)
    exclude = np.ascontiguousarray(exclude, dtype=np.int64)
    if candidates is None:
        cand_ptr, cand_idx = _EMPTY, _EMPTY
    else:
        cand_ptr, cand_idx = (np.ascontiguousarray(a, dtype=np.int64) for a in candidates)
    return Q, X, exclude, cand_ptr, cand_idx


def radius_counts(Q, X, y, n_classes, theta, metric, exclude=None, candidates=None):
    """Per-query label counts of reference rows at distance strictly below ``theta``."""
    metric = MetricKind.parse(metric)
    Q, X, exclude, cp, ci = _prep(Q, X, exclude, candidates)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if _accel.numba_enabled():
        return _radius_counts_nb(Q, X, y, n_classes, exclude, metric.code, float(theta), cp, ci)
    return _radius_counts_np(Q, X, y, n_classes, exclude, metric, float(theta), cp, ci)


def knn_counts(Q, X, y, n_classes, k, metric, exclude=None, candidates=None):
    """Per-query label counts among the k nearest reference rows."""
    metric = MetricKind.parse(metric)
    Q, X, exclude, cp, ci = _prep(Q, X, exclude, candidates)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if _accel.numba_enabled():
        return _knn_counts_nb(Q, X, y, n_classes, exclude, metric.code, int(k), cp, ci)
    return _knn_counts_np(Q, X, y, n_classes, exclude, metric, int(k), cp, ci)


def knn_distances(Q, X, k, metric, exclude=None, candidates=None):
    """Sorted distances from each query to its k nearest reference rows."""
    metric = MetricKind.parse(metric)
    Q, X, exclude, cp, ci = _prep(Q, X, exclude, candidates)
    if _accel.numba_enabled():
        return _knn_distances_nb(Q, X, exclude, metric.code, int(k), cp, ci)
    return _knn_distances_np(Q, X, exclude, metric, int(k), cp, ci)
