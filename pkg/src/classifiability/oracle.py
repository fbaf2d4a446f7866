"""Ground truth for testing the estimator.

* :func:`bayes_limit` integrates ``max_a w_a f_a(x)`` with the midpoint rule for
  problems whose class densities are tabulated on a 1D or 2D grid.
* :func:`reference_estimate` is a deliberately naive O(n^2) re-implementation of
  the estimator, used to check the production path.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ClassTable,
    EstimateReport,
    LabeledDataset,
    NeighborhoodSpec,
    class_proportions,
    validate_dataset,
)
from .errors import DegenerateProblem
from .estimator import ENTROPY_IDENTITY_TOL, full_entropy
from .metrics import distances_to

DEFAULT_CELLS_1D = 4096
DEFAULT_CELLS_2D = 512
NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class AnalyticProblem:
    """Class densities tabulated at the cell midpoints of a regular grid.

    ``densities`` has shape ``(n_classes, *cells)`` and each class integrates to
    one over the box (cell value times cell volume summed).
    """

    bounds: tuple
    cells: tuple
    weights: np.ndarray
    densities: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        cells = tuple(int(c) for c in self.cells)
        if len(bounds) not in (1, 2) or len(cells) != len(bounds):
            raise ValueError("problems must be 1D or 2D with one cell count per axis")
        if any(hi <= lo for lo, hi in bounds) or any(c < 1 for c in cells):
            raise ValueError(f"invalid grid {bounds} / {cells}")
        dens = np.asarray(self.densities, dtype=np.float64)
        if dens.shape[1:] != cells:
            raise ValueError(f"density table shape {dens.shape[1:]} does not match cells {cells}")
        if dens.shape[0] < 2:
            raise ValueError("an analytic problem needs at least two classes")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("densities must be finite and non-negative")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (dens.shape[0],) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("class weights must be positive and sum to 1")
        names = tuple(self.names) or tuple(str(i) for i in range(dens.shape[0]))
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "names", names)
        mass = dens.reshape(dens.shape[0], -1).sum(axis=1) * self.cell_volume
        if np.any(mass == 0):
            raise DegenerateProblem("a class density is zero everywhere on the grid")
        if np.any(np.abs(mass - 1.0) > NORMALIZATION_TOL):
            raise ValueError(f"densities are not normalized: masses {mass.tolist()}")

    @property
    def dims(self) -> int:
        return len(self.bounds)

    @property
    def n_classes(self) -> int:
        return self.densities.shape[0]

    @property
    def cell_widths(self):
        return tuple((hi - lo) / c for (lo, hi), c in zip(self.bounds, self.cells))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.cell_widths)

    def midpoints(self):
        return [lo + (np.arange(c) + 0.5) * w
                for (lo, _), c, w in zip(self.bounds, self.cells, self.cell_widths)]


# ---------------------------------------------------------------- families


def _grid(bounds, cells):
    mids = [lo + (np.arange(c) + 0.5) * (hi - lo) / c for (lo, hi), c in zip(bounds, cells)]
    return np.meshgrid(*mids, indexing="ij")


def _family_values(spec, bounds, cells):
    """Unnormalized density of one named family at the grid midpoints."""
    family = spec["family"]
    coords = _grid(bounds, cells)
    dims = len(bounds)
    if family == "uniform":
        low = np.broadcast_to(np.asarray(spec.get("low", [b[0] for b in bounds]), float), (dims,))
        high = np.broadcast_to(np.asarray(spec.get("high", [b[1] for b in bounds]), float), (dims,))
        inside = np.ones(coords[0].shape, dtype=bool)
        for axis in range(dims):
            inside &= (coords[axis] >= low[axis]) & (coords[axis] <= high[axis])
        return inside.astype(float)
    if family == "triangular-x":
        axis = int(spec.get("axis", 0))
        lo, hi = bounds[axis]
        x = coords[axis]
        return (hi - x) if spec.get("reverse", False) else (x - lo)
    if family == "gaussian":
        mean = np.broadcast_to(np.asarray(spec.get("mean", 0.0), float), (dims,))
        sigma = float(spec.get("sigma", 1.0))
        r2 = sum((coords[a] - mean[a]) ** 2 for a in range(dims))
        return np.exp(-0.5 * r2 / sigma ** 2)
    if family == "ring":
        if dims != 2:
            raise ValueError("the ring family is two-dimensional")
        center = np.asarray(spec.get("center", [0.0, 0.0]), float)
        radius = float(spec["radius"])
        sigma = float(spec.get("sigma", 0.1))
        r = np.hypot(coords[0] - center[0], coords[1] - center[1])
        return np.exp(-0.5 * ((r - radius) / sigma) ** 2)
    if family == "table":
        values = np.asarray(spec["values"], dtype=np.float64).reshape(tuple(cells))
        return values
    raise ValueError(f"unknown density family {family!r}")


def from_families(families, bounds, cells, weights=None, names=()) -> AnalyticProblem:
    """Tabulate and normalize named density families on a grid."""
    bounds = tuple(tuple(b) for b in bounds)
    cells = tuple(int(c) for c in cells)
    volume = math.prod((hi - lo) / c for (lo, hi), c in zip(bounds, cells))
    tables = []
    for spec in families:
        values = _family_values(spec, bounds, cells)
        mass = values.sum() * volume
        if not mass > 0:
            raise DegenerateProblem(f"family {spec!r} has no mass inside the box")
        tables.append(values / mass)
    if weights is None:
        weights = np.full(len(tables), 1.0 / len(tables))
    names = tuple(names) or tuple(spec.get("name", str(i)) for i, spec in enumerate(families))
    return AnalyticProblem(bounds, cells, np.asarray(weights, float), np.stack(tables), names)


def _default_cells(dims):
    return [DEFAULT_CELLS_1D] if dims == 1 else [DEFAULT_CELLS_2D] * dims


BUILTIN_PROBLEMS = {
    # class densities 2x and 2(1 - x) on [0, 1]
    "linear1d": dict(bounds=[[0, 1]], classes=[
        {"name": "0", "family": "triangular-x"},
        {"name": "1", "family": "triangular-x", "reverse": True},
    ]),
    "identical-uniform": dict(bounds=[[0, 1]], classes=[
        {"name": "0", "family": "uniform"},
        {"name": "1", "family": "uniform"},
    ]),
    "disjoint-uniform": dict(bounds=[[0, 2]], classes=[
        {"name": "0", "family": "uniform", "low": [0], "high": [1]},
        {"name": "1", "family": "uniform", "low": [1], "high": [2]},
    ]),
    "overlap-uniform": dict(bounds=[[0, 2]], classes=[
        {"name": "0", "family": "uniform", "low": [0], "high": [1]},
        {"name": "1", "family": "uniform", "low": [0.5], "high": [1.5]},
    ]),
    "gaussians2d": dict(bounds=[[-4, 5], [-4, 4]], classes=[
        {"name": "0", "family": "gaussian", "mean": [0, 0], "sigma": 1.0},
        {"name": "1", "family": "gaussian", "mean": [1.5, 0], "sigma": 1.0},
    ]),
    "rings2d": dict(bounds=[[-2, 2], [-2, 2]], classes=[
        {"name": "0", "family": "ring", "radius": 1.0, "sigma": 0.15},
        {"name": "1", "family": "ring", "radius": 0.5, "sigma": 0.15},
    ]),
}


def problem_from_dict(spec: dict, cells=None) -> AnalyticProblem:
    """Build a problem from the JSON layout::

        {"bounds": [[lo, hi], ...], "cells": [...], "weights": [...],
         "classes": [{"name": ..., "family": ..., <params>}, ...]}

    ``cells`` and ``weights`` are optional; ``family`` may be ``table`` with a
    ``values`` array of the grid shape.
    """
    bounds = spec["bounds"]
    grid = cells or spec.get("cells") or _default_cells(len(bounds))
    classes = spec["classes"]
    return from_families(classes, bounds, grid, spec.get("weights"),
                         [c.get("name", str(i)) for i, c in enumerate(classes)])


def builtin_problem(name: str, cells=None) -> AnalyticProblem:
    try:
        spec = BUILTIN_PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known: {sorted(BUILTIN_PROBLEMS)}") from None
    return problem_from_dict(spec, cells)


def load_problem(path, cells=None) -> AnalyticProblem:
    with open(Path(path), encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh), cells)


# ------------------------------------------------------------- quadrature


def bayes_limit(problem: AnalyticProblem) -> float:
    """Expected maximum posterior: the sum over cells of ``volume * max_a w_a f_a``.

    Cells without mixture mass contribute nothing.
    """
    weighted = problem.weights.reshape((-1,) + (1,) * problem.dims) * problem.densities
    if not np.any(weighted > 0):
        raise DegenerateProblem("all class densities vanish")
    return math.fsum(weighted.max(axis=0).ravel().tolist()) * problem.cell_volume


def sample_problem(problem: AnalyticProblem, n: int, seed: int = 0) -> LabeledDataset:
    """Draw ``n`` labeled points: class by weight, then position from the class density.

    Positions are piecewise-uniform inside grid cells, which is exact inverse-CDF
    sampling of the tabulated density.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.choice(problem.n_classes, size=n, p=problem.weights)
    X = np.empty((n, problem.dims))
    widths = np.asarray(problem.cell_widths)
    lows = np.asarray([lo for lo, _ in problem.bounds])
    for c in range(problem.n_classes):
        rows = np.flatnonzero(labels == c)
        if rows.size == 0:
            continue
        mass = problem.densities[c].ravel()
        cdf = np.cumsum(mass)
        cdf /= cdf[-1]
        u = rng.random(rows.size)
        flat = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        lower = np.where(flat > 0, cdf[flat - 1], 0.0)
        span = cdf[flat] - lower
        frac = np.where(span > 0, (u - lower) / np.where(span > 0, span, 1.0), 0.5)
        cell = np.stack(np.unravel_index(flat, problem.cells), axis=1).astype(float)
        if problem.dims == 1:
            offset = frac[:, None]
        else:
            offset = np.column_stack([frac, rng.random((rows.size, problem.dims - 1))])
        X[rows] = lows + (cell + np.clip(offset, 0.0, 1.0)) * widths
    present = np.unique(labels)
    if present.size < problem.n_classes:
        # keep the dataset valid when a tiny n misses a class
        keep_names = tuple(problem.names[i] for i in present)
        remap = np.searchsorted(present, labels)
        return validate_dataset(X, remap, ClassTable(keep_names))
    return validate_dataset(X, labels, ClassTable(problem.names))


# -------------------------------------------------------- naive estimator


def reference_estimate(dataset: LabeledDataset, spec: NeighborhoodSpec,
                       full_entropy_values: bool = False) -> EstimateReport:
    """Straight-line O(n^2) estimator with no index and no parallelism.

    Each point's neighborhood is found from a full distance row: the radius rule
    by direct comparison, the k-nearest rule by a complete (distance, index)
    sort. The logarithmic entropy formula is evaluated for every point and
    checked against ``1 - max p``; the closed form is reported unless
    ``full_entropy_values`` is set.
    """
    spec.check(dataset.n)
    X = dataset.features
    y = dataset.labels.tolist()
    n = dataset.n
    C = dataset.n_classes
    H = np.zeros(n)
    support = np.zeros(n, dtype=np.int64)
    top_by_size = defaultdict(int)
    for i in range(n):
        row = distances_to(spec.metric, X, X[i]).tolist()
        if spec.mode == "radius":
            members = [j for j in range(n) if j != i and row[j] < spec.theta]
        else:
            others = sorted((row[j], j) for j in range(n) if j != i)
            members = [j for _, j in others[:spec.k]]
        counts = [0] * C
        for j in members:
            counts[y[j]] += 1
        size = len(members)
        support[i] = size
        if size == 0:
            top_by_size[0] += 1
            continue
        top = max(counts)
        top_by_size[size] += top
        closed = 1.0 - top / size
        full = full_entropy([c / size for c in counts])
        if abs(full - closed) > ENTROPY_IDENTITY_TOL:
            raise ArithmeticError(f"entropy identity violated at point {i}: {full} vs {closed}")
        H[i] = full if full_entropy_values else closed
    if full_entropy_values:
        limit = 1.0 - math.fsum(H.tolist()) / n
    else:
        terms = [float(top_by_size.pop(0, 0))]
        terms += [c / s for s, c in sorted(top_by_size.items())]
        limit = math.fsum(terms) / n
    return EstimateReport(
        limit=limit,
        per_point_entropy=H,
        class_proportions=class_proportions(dataset),
        empty_neighborhood_count=int(np.count_nonzero(support == 0)),
        config=spec,
        n=n,
        d=dataset.d,
        support_sizes=support,
        classes=dataset.classes.names,
    )
