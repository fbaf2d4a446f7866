"""Estimate the intrinsic upper bound on classification accuracy of a labeled
dataset from the entropy of class proportions in local neighborhoods."""

from .core import (
    ClassProbabilities,
    ClassTable,
    EstimateReport,
    LabeledDataset,
    NeighborhoodSpec,
    class_proportions,
    validate_dataset,
)
from .estimator import (
    classifiability,
    entropy_map,
    jackknife,
    local_entropy,
    local_probabilities,
    overclass_check,
    rho_hat,
    subsample_sweep,
)
from .metrics import MetricKind, distance
from .neighbors import build_index, k_from_fraction, neighbors_k, neighbors_radius, threshold_from_fraction

__version__ = "0.1.0"

__all__ = [
    "ClassProbabilities",
    "ClassTable",
    "EstimateReport",
    "LabeledDataset",
    "MetricKind",
    "NeighborhoodSpec",
    "build_index",
    "class_proportions",
    "classifiability",
    "distance",
    "entropy_map",
    "jackknife",
    "k_from_fraction",
    "local_entropy",
    "local_probabilities",
    "neighbors_k",
    "neighbors_radius",
    "overclass_check",
    "rho_hat",
    "subsample_sweep",
    "threshold_from_fraction",
    "validate_dataset",
]
