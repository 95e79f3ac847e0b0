"""Datasets, CSV ingestion, stratified splits and disjoint partitions."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError

MAX_FEATURES = 64


class DataError(InputError):
    """Raised for malformed datasets and CSV files."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``m x n`` feature matrix with labels in ``{-1, +1}``.

    Arrays are copied and made read-only, so a Dataset can be shared freely
    between threads.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = None
    _fingerprint: str = field(default="", init=False, repr=False)

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim != 2:
            raise DataError(f"features must be a 2-d matrix, got shape {x.shape}")
        m, n = x.shape
        if m < 1:
            raise DataError("m >= 1 required (no rows)")
        if n < 1:
            raise DataError("n >= 1 required (no feature columns)")
        if n > MAX_FEATURES:
            raise DataError(f"at most {MAX_FEATURES} features are supported, got {n}")
        if not np.all(np.isfinite(x)):
            i, j = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite feature value at row {i + 1}, column {j + 1}")
        y = np.array(self.labels, dtype=float).reshape(-1)
        if y.size != m:
            raise DataError(f"{m} feature rows but {y.size} labels")
        bad = ~np.isin(y, (-1.0, 1.0))
        if bad.any():
            i = int(np.argmax(bad))
            raise DataError(f"label at row {i + 1} is {y[i]!r}, expected -1 or +1")
        names = self.feature_names
        names = tuple(f"x{j + 1}" for j in range(n)) if names is None else tuple(map(str, names))
        if len(names) != n:
            raise DataError(f"{len(names)} feature names for {n} columns")
        if len(set(names)) != n:
            raise DataError("feature names must be unique")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)
        digest = hashlib.sha256()
        digest.update(np.array(x.shape, dtype=np.int64).tobytes())
        digest.update(np.ascontiguousarray(x).tobytes())
        digest.update(y.tobytes())
        digest.update("\x1f".join(names).encode())
        object.__setattr__(self, "_fingerprint", digest.hexdigest())

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def fingerprint(self) -> str:
        """SHA-256 over shape, values, labels and names."""
        return self._fingerprint

    @property
    def class_counts(self) -> tuple[int, int]:
        """``(m_plus, m_minus)``."""
        plus = int(np.count_nonzero(self.labels > 0))
        return plus, self.m - plus

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names)

    def with_features(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return Dataset(self.features[:, columns], self.labels,
                       [self.feature_names[j] for j in columns])

    def same_as(self, other: "Dataset") -> bool:
        return self.fingerprint == other.fingerprint


def _resolve_column(header: list[str], label_column) -> int:
    if isinstance(label_column, int):
        idx = label_column
    elif isinstance(label_column, str) and label_column in header:
        return header.index(label_column)
    else:
        try:
            idx = int(label_column)
        except (TypeError, ValueError):
            raise DataError(f"label column {label_column!r} not found in header") from None
    if idx < 0:
        idx += len(header)
    if not 0 <= idx < len(header):
        raise DataError(f"label column index {label_column} out of range "
                        f"for {len(header)} columns")
    return idx


def load_csv(path, label_column=-1, positive_label=None, *, standardize: bool = False) -> Dataset:
    """Read a comma-separated file with a header row.

    ``label_column`` is a header name or a 0-based index (negative counts
    from the end). Rows whose label equals ``positive_label`` get ``+1`` and
    all others ``-1``; the file must contain exactly two distinct labels
    (one is allowed if it is the positive one or ``positive_label`` is
    given). When ``positive_label`` is omitted, ``"1"`` / ``"+1"`` is tried,
    then the lexicographically larger label.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        label_idx = _resolve_column(header, label_column)
        feature_cols = [j for j in range(len(header)) if j != label_idx]
        if not feature_cols:
            raise DataError("n >= 1 required: the file has only a label column")
        rows, raw_labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DataError(f"row {line_no}: expected {len(header)} cells, got {len(record)}")
            label = record[label_idx].strip()
            if label == "":
                raise DataError(f"row {line_no}, column {header[label_idx]!r}: missing label")
            values = []
            for j in feature_cols:
                cell = record[j].strip()
                try:
                    value = float(cell)
                except ValueError:
                    what = "missing value" if cell == "" else f"non-numeric value {cell!r}"
                    raise DataError(f"row {line_no}, column {header[j]!r}: {what}") from None
                if not math.isfinite(value):
                    raise DataError(f"row {line_no}, column {header[j]!r}: non-finite value {cell!r}")
                values.append(value)
            rows.append(values)
            raw_labels.append(label)
    if not rows:
        raise DataError(f"{path} has a header but no data rows")

    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise DataError(f"more than two label values in column {header[label_idx]!r}: "
                        f"{distinct[:5]}")
    positive = _pick_positive(distinct, positive_label)
    labels = np.array([1.0 if lab == positive else -1.0 for lab in raw_labels])
    data = Dataset(np.array(rows), labels, [header[j] for j in feature_cols])
    return zscore(data) if standardize else data


def _pick_positive(distinct: list[str], positive_label) -> str:
    if positive_label is not None:
        positive = str(positive_label)
        if positive not in distinct and len(distinct) == 2:
            raise DataError(f"positive label {positive!r} not among labels {distinct}")
        return positive
    for candidate in ("1", "+1", "1.0"):
        if candidate in distinct:
            return candidate
    return distinct[-1]


def write_csv(d: Dataset, path, *, label_name: str = "label") -> None:
    """Write ``d`` so that ``load_csv(path, label_name, "1")`` reproduces it."""
    if label_name in d.feature_names:
        raise DataError(f"label column name {label_name!r} clashes with a feature name")
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([*d.feature_names, label_name])
        for row, label in zip(d.features, d.labels):
            writer.writerow([repr(float(v)) for v in row] + ["1" if label > 0 else "-1"])


def zscore(d: Dataset) -> Dataset:
    """Centre each column and scale it to unit (population) variance.

    Constant columns are centred only.
    """
    mean = d.features.mean(axis=0)
    std = d.features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return Dataset((d.features - mean) / std, d.labels, d.feature_names)


@dataclass(frozen=True)
class SplitResult:
    train: Dataset
    test: Dataset
    seed: int


def _stratified_test_counts(counts: dict[float, int], total_test: int) -> dict[float, int]:
    m = sum(counts.values())
    quotas = {c: total_test * k / m for c, k in counts.items()}
    alloc = {c: int(math.floor(q)) for c, q in quotas.items()}
    short = total_test - sum(alloc.values())
    # Largest remainder; ties go to the +1 class first.
    order = sorted(counts, key=lambda c: (-(quotas[c] - alloc[c]), -c))
    for c in order[:short]:
        alloc[c] += 1
    return alloc


def train_test_split(d: Dataset, test_fraction: float, seed: int) -> SplitResult:
    """Stratified split; each class contributes its proportional share of test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test fraction must lie in (0, 1), got {test_fraction}")
    total_test = int(math.floor(test_fraction * d.m + 0.5))
    if total_test < 1 or total_test > d.m - 1:
        raise DataError(f"a test fraction of {test_fraction} on {d.m} rows leaves "
                        "an empty train or test set")
    counts = {c: int(np.count_nonzero(d.labels == c)) for c in (1.0, -1.0)}
    counts = {c: k for c, k in counts.items() if k}
    alloc = _stratified_test_counts(counts, total_test)
    rng = np.random.default_rng(seed)
    test_rows = []
    for c in (1.0, -1.0):
        if c not in counts:
            continue
        rows = np.flatnonzero(d.labels == c)
        test_rows.append(rng.permutation(rows)[:alloc[c]])
    test_idx = np.sort(np.concatenate(test_rows))
    train_mask = np.ones(d.m, dtype=bool)
    train_mask[test_idx] = False
    return SplitResult(d.take(np.flatnonzero(train_mask)), d.take(test_idx), seed)


@dataclass(frozen=True)
class PartitionResult:
    subsets: tuple[Dataset, ...]
    m_s: int
    leftover_rows: int

    @property
    def count(self) -> int:
        return len(self.subsets)


def default_subset_size(n: int) -> int:
    """Six rows per feature."""
    return 6 * n


def disjoint_partition(d: Dataset, m_s: int | None = None, seed: int = 0) -> PartitionResult:
    """Shuffle rows and cut ``floor(m / m_s)`` disjoint subsets of ``m_s`` rows.

    Leftover rows are dropped so that every subset has the same size.
    """
    if m_s is None:
        m_s = default_subset_size(d.n)
    if m_s < 1:
        raise DataError(f"subset size must be positive, got {m_s}")
    if d.m < m_s:
        raise DataError(f"cannot cut subsets of {m_s} rows from {d.m} rows; "
                        f"use a subset size of at most {d.m}")
    count = d.m // m_s
    order = np.random.default_rng(seed).permutation(d.m)
    subsets = tuple(d.take(order[k * m_s:(k + 1) * m_s]) for k in range(count))
    return PartitionResult(subsets, m_s, d.m - count * m_s)
