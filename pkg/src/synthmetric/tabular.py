"""Dataset representation, CSV I/O and stratified folding."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConstantLabel,
    EmptyDataset,
    InvalidLabel,
    MissingLabelColumn,
    NonNumericCell,
    SchemaMismatch,
    TooFewSamplesPerClass,
)
from .rng import make_rng


class FeatureKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class FeatureSchema:
    feature_names: tuple[str, ...]
    feature_kinds: tuple[FeatureKind, ...]
    label_name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(
            self, "feature_kinds", tuple(FeatureKind(k) for k in self.feature_kinds)
        )
        if not self.feature_names:
            raise ValueError("schema needs at least one feature")
        if len(self.feature_names) != len(self.feature_kinds):
            raise ValueError("feature_names and feature_kinds differ in length")
        if any(not name for name in self.feature_names):
            raise ValueError("feature names must be non-empty")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if not self.label_name or self.label_name in self.feature_names:
            raise ValueError(f"label column {self.label_name!r} must not be a feature")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([k is FeatureKind.BINARY for k in self.feature_kinds])

    @property
    def all_binary(self) -> bool:
        return all(k is FeatureKind.BINARY for k in self.feature_kinds)

    @classmethod
    def binary(cls, d: int, label_name: str = "label") -> FeatureSchema:
        """Schema of ``d`` binary features named ``f0 .. f{d-1}``."""
        return cls(
            tuple(f"f{j}" for j in range(d)), (FeatureKind.BINARY,) * d, label_name
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled feature table. Arrays are copied and frozen on construction."""

    schema: FeatureSchema
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if rows.shape[1] != self.schema.n_features:
            raise SchemaMismatch(
                f"rows have {rows.shape[1]} columns, schema has {self.schema.n_features}"
            )
        if labels.shape != (rows.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        if not np.all((labels == 0) | (labels == 1)):
            raise InvalidLabel("labels must be 0 (benign) or 1 (malware)")
        mask = self.schema.binary_mask
        b = rows[:, mask]
        if not np.all((b == 0.0) | (b == 1.0)):
            raise ValueError("binary feature holds a value outside {0, 1}")
        c = rows[:, ~mask]
        if c.size and not (np.all(c >= 0.0) and np.all(c <= 1.0)):
            raise ValueError("continuous feature outside [0, 1]")
        object.__setattr__(self, "rows", _readonly(rows))
        object.__setattr__(self, "labels", _readonly(labels.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def subset(self, index: np.ndarray | Sequence[int]) -> Dataset:
        index = np.asarray(index)
        return Dataset(self.schema, self.rows[index], self.labels[index])

    def class_rows(self, label: int) -> np.ndarray:
        return self.rows[self.labels == label]

    def same_contents(self, other: Dataset) -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.labels, other.labels)
        )


def check_same_schema(real: Dataset, syn: Dataset) -> None:
    if real.schema != syn.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCell(row, col, text) from None
    if not math.isfinite(value):
        raise NonNumericCell(row, col, text)
    return value


def load_csv(path: str | Path, label_name: str) -> Dataset:
    """Read a numeric CSV with a header row into a :class:`Dataset`.

    A column is Binary when every value is 0 or 1; otherwise it is min-max
    scaled to [0, 1]. Constant columns scale to all-zero and are therefore
    Binary. Row order is preserved.

    Raises:
        MissingLabelColumn: ``label_name`` is not in the header.
        NonNumericCell: a cell does not parse as a finite number.
        EmptyDataset: the file has a header but no data rows.
        ConstantLabel: only one class is present.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        if label_name not in header:
            raise MissingLabelColumn(f"{path}: no column named {label_name!r}")
        values = []
        for i, record in enumerate(reader):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise SchemaMismatch(
                    f"{path}: row {i} has {len(record)} cells, header has {len(header)}"
                )
            values.append([_parse_cell(c.strip(), i, h) for c, h in zip(record, header)])
    if not values:
        raise EmptyDataset(f"{path}: no data rows")

    table = np.array(values, dtype=np.float64)
    label_idx = header.index(label_name)
    labels = table[:, label_idx]
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidLabel(f"{path}: label column must hold only 0 and 1")
    if np.unique(labels).size < 2:
        raise ConstantLabel(f"{path}: label column holds a single class")

    names = [h for j, h in enumerate(header) if j != label_idx]
    raw = np.delete(table, label_idx, axis=1)
    rows, kinds = normalize_columns(raw)
    return Dataset(FeatureSchema(tuple(names), tuple(kinds), label_name), rows, labels)


def normalize_columns(raw: np.ndarray) -> tuple[np.ndarray, list[FeatureKind]]:
    """Min-max scale non-binary columns and infer each column's kind."""
    rows = np.array(raw, dtype=np.float64, copy=True)
    kinds = []
    for j in range(rows.shape[1]):
        col = rows[:, j]
        lo, hi = col.min(), col.max()
        if hi > lo and not np.all((col == 0.0) | (col == 1.0)):
            rows[:, j] = (col - lo) / (hi - lo)
        elif hi == lo and lo not in (0.0, 1.0):
            rows[:, j] = 0.0
        if np.all((rows[:, j] == 0.0) | (rows[:, j] == 1.0)):
            kinds.append(FeatureKind.BINARY)
        else:
            kinds.append(FeatureKind.CONTINUOUS)
    return rows, kinds


def write_csv(data: Dataset, path: str | Path) -> None:
    """Write ``data`` so that :func:`load_csv` reproduces it exactly."""
    mask = data.schema.binary_mask
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*data.schema.feature_names, data.schema.label_name])
        for row, label in zip(data.rows, data.labels):
            cells = [
                str(int(v)) if is_bin else repr(float(v)) for v, is_bin in zip(row, mask)
            ]
            writer.writerow([*cells, str(int(label))])


def class_counts(data: Dataset | Sequence[int] | np.ndarray) -> tuple[int, int]:
    """Return ``(n_benign, n_malware)``."""
    labels = np.asarray(data.labels if isinstance(data, Dataset) else data)
    n_malware = int(np.count_nonzero(labels == 1))
    return int(labels.size) - n_malware, n_malware


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", _readonly(np.asarray(self.assignments)))

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(data: Dataset, k: int, seed: int) -> FoldPlan:
    """Assign rows to ``k`` stratified folds.

    Each class is shuffled, then dealt round-robin; the second class starts
    where the first left off so fold sizes also stay within one row.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = make_rng(seed, "stratified_kfold", k)
    assignments = np.empty(data.n, dtype=np.int64)
    offset = 0
    for label in (0, 1):
        idx = np.flatnonzero(data.labels == label)
        if idx.size < k:
            raise TooFewSamplesPerClass(
                f"class {label} has {idx.size} samples, need at least k={k}"
            )
        idx = idx[rng.permutation(idx.size)]
        assignments[idx] = (np.arange(idx.size) + offset) % k
        offset = (offset + idx.size) % k
    return FoldPlan(k, assignments)
