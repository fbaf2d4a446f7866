"""CSV ingestion and export, standard scaling, JSON report output."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ClassTable, LabeledDataset, validate_dataset
from .errors import EmptyFile, MissingColumn, ParseError

NUMERIC = "numeric"
ORDINAL = "ordinal"


@dataclass(frozen=True)
class ColumnSchema:
    """Which column holds the label and how each feature column is encoded.

    An empty ``feature_columns`` means every column except the label, in file
    order. Columns absent from ``encodings`` are numeric.
    """

    label_column: str
    feature_columns: tuple = ()
    encodings: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if self.label_column in self.feature_columns:
            raise ValueError(f"label column {self.label_column!r} is also listed as a feature")
        for col, enc in self.encodings.items():
            if enc not in (NUMERIC, ORDINAL):
                raise ValueError(f"unknown encoding {enc!r} for column {col!r}")

    def resolve(self, header) -> tuple:
        if self.label_column not in header:
            raise MissingColumn(f"label column {self.label_column!r} not in header {header}")
        features = self.feature_columns or tuple(h for h in header if h != self.label_column)
        for col in features:
            if col not in header:
                raise MissingColumn(f"feature column {col!r} not in header {header}")
        if not features:
            raise MissingColumn("no feature columns")
        return features


@dataclass(frozen=True, eq=False)
class LoadedTable:
    dataset: LabeledDataset
    feature_names: tuple
    categories: dict


def load_csv(path, schema: ColumnSchema, classes: Optional[ClassTable] = None) -> LabeledDataset:
    return read_csv(path, schema, classes).dataset


def read_csv(path, schema: ColumnSchema, classes: Optional[ClassTable] = None) -> LoadedTable:
    """Parse a headed, comma-separated UTF-8 file.

    Ordinal columns map their tokens to 0..m-1 in order of first appearance;
    labels map to a class table the same way unless ``classes`` pins the order.
    Row numbers in errors count the header as row 1.
    """
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile(f"{path} has no header row")
        header = [h.strip() for h in header]
        features = schema.resolve(header)
        label_pos = header.index(schema.label_column)
        positions = [header.index(c) for c in features]
        ordinal = [schema.encodings.get(c, NUMERIC) == ORDINAL for c in features]
        codes = [dict() for _ in features]
        class_codes = {name: i for i, name in enumerate(classes.names)} if classes else {}
        rows, labels = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not tok.strip() for tok in record):
                continue
            if len(record) != len(header):
                raise ParseError(f"row {lineno}: expected {len(header)} fields, got {len(record)}",
                                 row=lineno)
            values = []
            for pos, col, is_ord, table in zip(positions, features, ordinal, codes):
                token = record[pos].strip()
                if is_ord:
                    values.append(float(table.setdefault(token, len(table))))
                    continue
                try:
                    values.append(float(token))
                except ValueError:
                    raise ParseError(f"row {lineno}, column {col!r}: cannot parse {token!r} as a number",
                                     row=lineno, column=col) from None
            name = record[label_pos].strip()
            if name not in class_codes:
                if classes is not None:
                    raise ParseError(f"row {lineno}: unknown class {name!r}", row=lineno,
                                     column=schema.label_column)
                class_codes[name] = len(class_codes)
            rows.append(values)
            labels.append(class_codes[name])
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    table = classes or ClassTable(tuple(class_codes))
    dataset = validate_dataset(np.asarray(rows, dtype=np.float64), labels, table)
    categories = {c: tuple(t) for c, t, o in zip(features, codes, ordinal) if o}
    return LoadedTable(dataset, tuple(features), categories)


def save_csv(dataset: LabeledDataset, path, feature_names=None, label_name: str = "label") -> None:
    """Write features with shortest round-trip decimals, then the class name."""
    names = list(feature_names or (f"x{j}" for j in range(dataset.d)))
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + [label_name])
        for row, lab in zip(dataset.features.tolist(), dataset.labels.tolist()):
            writer.writerow([repr(v) for v in row] + [dataset.classes.names[lab]])


@dataclass(frozen=True, eq=False)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std == 0

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.constant, 1.0, self.std)
        return np.where(self.constant, 0.0, (X - self.mean) / safe)


def standard_scale(dataset: LabeledDataset):
    """Center each column and divide by its population std; constant columns become 0."""
    if dataset.n < 2:
        raise ValueError("standard scaling needs at least two rows")
    X = dataset.features
    params = ScalerParams(X.mean(axis=0), X.std(axis=0))
    scaled = validate_dataset(params.transform(X), dataset.labels, dataset.classes)
    return scaled, params


# ---------------------------------------------------------------- reports


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(obj, path=None, stream=None) -> None:
    text = dumps(obj)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    else:
        stream.write(text)


def write_entropy_csv(emap, path) -> None:
    """Columns: index, label, entropy, neighborhood_size, x0..x{d-1}."""
    d = emap.features.shape[1]
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "label", "entropy", "neighborhood_size"] + [f"x{j}" for j in range(d)])
        for rec in emap.records():
            writer.writerow([rec["index"], rec["label"], repr(rec["entropy"]), rec["neighborhood_size"]]
                            + [repr(v) for v in rec["coordinates"]])
