"""Dataset loading, train/test handling, and per-generation mini-batches."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class DataMatrix:
    """An immutable numeric dataset: features X (n x d), targets y (n)."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def load_csv(path, target_column: str) -> DataMatrix:
    """Load a headered CSV, splitting off ``target_column`` as y.

    Rejects non-numeric and non-finite cells with a diagnostic naming the
    file line and column; header-only files fail with "no observations".
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not found in header {header}")
        target_idx = header.index(target_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != target_idx)
        if not feature_names:
            raise DataError(f"{path}: no feature columns besides target {target_column!r}")
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {line_no} has {len(row)} cells, expected {len(header)}")
            parsed = []
            for col_name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}, column {col_name!r}: could not parse {cell.strip()!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}: line {line_no}, column {col_name!r}: non-finite value {cell.strip()!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no observations")
    table = np.asarray(rows, dtype=np.float64)
    mask = np.ones(len(header), dtype=bool)
    mask[target_idx] = False
    return DataMatrix(X=table[:, mask], y=table[:, target_idx], feature_names=feature_names)


def coefficient_scale(data: DataMatrix) -> float:
    """max |x| over every cell of X; sets the spread of initial constants.

    An all-zero X yields scale 0 (all initial constants 0); warned about
    but not rejected.
    """
    scale = float(np.max(np.abs(data.X))) if data.X.size else 0.0
    if scale == 0.0:
        warnings.warn("all feature values are zero; initial constants will all be 0", stacklevel=2)
    return scale


def split_train_test(
    data: DataMatrix, rng: np.random.Generator, test_fraction: float = 0.25
) -> tuple[DataMatrix, DataMatrix]:
    """Seeded random split; used when no pre-split test file is provided."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test fraction must be in (0, 1), got {test_fraction}")
    n_test = max(1, int(round(data.n * test_fraction)))
    if n_test >= data.n:
        raise DataError(f"cannot hold out {n_test} of {data.n} rows")
    perm = rng.permutation(data.n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return (
        DataMatrix(data.X[train_idx], data.y[train_idx], data.feature_names),
        DataMatrix(data.X[test_idx], data.y[test_idx], data.feature_names),
    )


@dataclass
class BatchSampler:
    """Fresh uniform sample of training rows, once per generation.

    When the training set is no larger than the batch size, every row is
    used and the "batch" is the identity selection.
    """

    batch_size: int
    rng: np.random.Generator
    current_batch: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    def resample(self, n_train: int, generation: int) -> np.ndarray:
        if n_train > self.batch_size:
            idx = self.rng.choice(n_train, size=self.batch_size, replace=False)
        else:
            idx = np.arange(n_train, dtype=np.intp)
        self.current_batch = idx
        return idx
