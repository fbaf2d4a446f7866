"""Distance functions between feature vectors.

All metrics accumulate coordinate terms left to right (column 0 first). The
scalar :func:`distance`, the vectorized :func:`distances_to` and the compiled
kernels share that order, so every path produces bit-identical distances and
therefore identical neighborhoods.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DimensionMismatch


class MetricKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    CHEBYSHEV = "chebyshev"
    HAMMING = "hamming"
    CANBERRA = "canberra"
    BRAYCURTIS = "braycurtis"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = "|".join(m.value for m in cls)
            raise ValueError(f"unknown metric {name!r}; expected one of {valid}") from None

    @property
    def code(self) -> int:
        """Small integer used to dispatch inside compiled kernels."""
        return _CODES[self]

    @property
    def tree_p(self):
        """Minkowski exponent when a KD-tree can serve this metric, else None."""
        return {MetricKind.L1: 1.0, MetricKind.L2: 2.0, MetricKind.CHEBYSHEV: math.inf}.get(self)

    def __str__(self):
        return self.value


_CODES = {m: i for i, m in enumerate(MetricKind)}

# the metrics for which the triangle inequality holds
TRUE_METRICS = (
    MetricKind.L1,
    MetricKind.L2,
    MetricKind.CHEBYSHEV,
    MetricKind.HAMMING,
    MetricKind.CANBERRA,
)


def distance(metric, a, b) -> float:
    """Dissimilarity between two d-vectors under ``metric``.

    Canberra terms with ``a_i = b_i = 0`` contribute 0. Bray-Curtis divides by
    ``sum |a_i + b_i|`` and is 0 when that denominator vanishes. Hamming uses
    exact floating equality, which only makes sense for ordinal-encoded
    categorical columns.
    """
    metric = MetricKind.parse(metric)
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape or a.size == 0:
        raise DimensionMismatch(f"cannot compare vectors of length {a.size} and {b.size}")
    av = a.tolist()
    bv = b.tolist()
    if metric is MetricKind.L1:
        acc = 0.0
        for x, y in zip(av, bv):
            acc += abs(x - y)
        return acc
    if metric is MetricKind.L2:
        acc = 0.0
        for x, y in zip(av, bv):
            t = x - y
            acc += t * t
        return math.sqrt(acc)
    if metric is MetricKind.CHEBYSHEV:
        acc = 0.0
        for x, y in zip(av, bv):
            t = abs(x - y)
            if t > acc:
                acc = t
        return acc
    if metric is MetricKind.HAMMING:
        acc = 0.0
        for x, y in zip(av, bv):
            if x != y:
                acc += 1.0
        return acc
    if metric is MetricKind.CANBERRA:
        acc = 0.0
        for x, y in zip(av, bv):
            den = abs(x) + abs(y)
            if den > 0.0:
                acc += abs(x - y) / den
        return acc
    num = 0.0
    den = 0.0
    for x, y in zip(av, bv):
        num += abs(x - y)
        den += abs(x + y)
    return num / den if den > 0.0 else 0.0


def distances_to(metric, X, x) -> np.ndarray:
    """Distances from every row of ``X`` (or of a row block) to the vector ``x``.

    Works on ``X`` of shape (n, d) with ``x`` of shape (d,), or on a block
    ``X[None]``-style broadcast of shape (q, n, d) against (q, 1, d). The
    accumulation is vectorized over rows and sequential over columns.
    """
    metric = MetricKind.parse(metric)
    X = np.asarray(X, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if X.shape[-1] != x.shape[-1]:
        raise DimensionMismatch(f"feature dimension {X.shape[-1]} != {x.shape[-1]}")
    d = X.shape[-1]
    out_shape = np.broadcast_shapes(X.shape, x.shape)[:-1]
    acc = np.zeros(out_shape)
    if metric is MetricKind.BRAYCURTIS:
        den = np.zeros(out_shape)
        for j in range(d):
            a = X[..., j]
            b = x[..., j]
            acc += np.abs(a - b)
            den += np.abs(a + b)
        pos = den > 0.0
        return np.where(pos, acc / np.where(pos, den, 1.0), 0.0)
    for j in range(d):
        a = X[..., j]
        b = x[..., j]
        if metric is MetricKind.L1:
            acc += np.abs(a - b)
        elif metric is MetricKind.L2:
            t = a - b
            acc += t * t
        elif metric is MetricKind.CHEBYSHEV:
            np.maximum(acc, np.abs(a - b), out=acc)
        elif metric is MetricKind.HAMMING:
            acc += (a != b)
        else:
            den = np.abs(a) + np.abs(b)
            pos = den > 0.0
            acc += np.where(pos, np.abs(a - b) / np.where(pos, den, 1.0), 0.0)
    if metric is MetricKind.L2:
        np.sqrt(acc, out=acc)
    return acc
