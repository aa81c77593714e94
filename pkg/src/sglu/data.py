"""Datasets: CSV ingestion, row normalisation, truncation, replacement requests."""

from __future__ import annotations

import csv
import dataclasses
import os
from collections.abc import Iterable

import numpy as np

UNIT_TOL = 1e-6


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with +-1 labels.

    Rows are expected to have unit norm before training; :attr:`is_normalized`
    reports whether they do and :func:`normalize_rows` makes it so.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{len(y)} labels for {X.shape[0]} feature rows")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def is_normalized(self) -> bool:
        norms = np.linalg.norm(self.features, axis=1)
        return bool(np.all(np.abs(norms - 1.0) <= UNIT_TOL))

    def subset(self, idx) -> Dataset:
        return Dataset(self.features[idx], self.labels[idx], self.name)


@dataclasses.dataclass(frozen=True)
class UnlearnRequest:
    """Rows to replace with fresh random points."""

    indices: tuple[int, ...]
    seed: int = 0

    def __init__(self, indices: Iterable[int], seed: int = 0):
        idx = tuple(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError("request indices must be distinct")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "seed", seed)


def _remap_label(raw: str, class_pair, lineno: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"line {lineno}: label {raw!r} is not numeric") from None
    if class_pair is not None:
        neg, pos = (float(c) for c in class_pair)
        if value == neg:
            return -1.0
        if value == pos:
            return 1.0
        raise ValueError(f"line {lineno}: label {raw!r} not in class pair {class_pair}")
    if value in (-1.0, 1.0):
        return value
    if value == 0.0:
        return -1.0
    raise ValueError(f"line {lineno}: label {raw!r} must be -1/+1 or 0/1")


def load_csv(path: str | os.PathLike, *, class_pair=None, name: str | None = None) -> Dataset:
    """Read a headerless CSV of ``d`` feature columns followed by one label column.

    Labels may be +-1, 0/1 (0 maps to -1), or any two class tags given as
    ``class_pair=(negative, positive)``. Rows are returned as stored; call
    :func:`normalize_rows` before training.
    """
    rows, labels = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not field.strip() for field in record):
                continue
            if len(record) < 2:
                raise ValueError(f"line {lineno}: need at least one feature and a label")
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ValueError(f"line {lineno}: expected {width} columns, got {len(record)}")
            try:
                rows.append([float(v) for v in record[:-1]])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric feature value") from None
            labels.append(_remap_label(record[-1].strip(), class_pair, lineno))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), name or os.path.basename(str(path)))


def save_csv(ds: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def normalize_rows(ds: Dataset) -> Dataset:
    norms = np.linalg.norm(ds.features, axis=1)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise ValueError(f"row {bad} has zero norm and cannot be normalised")
    return Dataset(ds.features / norms[:, None], ds.labels, ds.name)


def truncate_to_multiple(ds: Dataset, b_max: int) -> Dataset:
    """Keep the first ``floor(n / b_max) * b_max`` rows."""
    if b_max < 1:
        raise ValueError(f"b_max must be >= 1, got {b_max}")
    keep = (ds.n // b_max) * b_max
    if keep == ds.n:
        return ds
    return Dataset(ds.features[:keep], ds.labels[:keep], ds.name)


def apply_request(ds: Dataset, req: UnlearnRequest) -> Dataset:
    """Replace the requested rows with unit-norm Gaussian directions and random labels."""
    if not req.indices:
        return ds
    idx = np.asarray(req.indices)
    if idx.min() < 0 or idx.max() >= ds.n:
        raise ValueError(f"request indices must lie in 0..{ds.n - 1}")
    rng = np.random.default_rng(req.seed)
    fresh = rng.standard_normal((len(idx), ds.dim))
    fresh /= np.linalg.norm(fresh, axis=1, keepdims=True)
    X = ds.features.copy()
    y = ds.labels.copy()
    X[idx] = fresh
    y[idx] = rng.choice((-1.0, 1.0), size=len(idx))
    return Dataset(X, y, ds.name)


def synthetic(n: int, d: int, margin: float, seed: int) -> Dataset:
    """Linearly separable two-class data with unit-norm rows.

    Each raw point is ``y * (margin + |g|) * u`` plus isotropic noise orthogonal
    to ``u``, so every point sits at least ``margin`` on its side of the
    hyperplane ``u^T x = 0`` before normalisation. The direction ``u`` depends
    only on ``d`` and ``seed``.
    """
    if n < 1 or d < 2:
        raise ValueError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    root = np.random.SeedSequence(seed)
    dir_rng, sample_rng = (np.random.default_rng(s) for s in root.spawn(2))
    u = dir_rng.standard_normal(d)
    u /= np.linalg.norm(u)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    sample_rng.shuffle(y)
    noise = sample_rng.standard_normal((n, d))
    noise -= np.outer(noise @ u, u)
    along = margin + np.abs(sample_rng.standard_normal(n))
    X = (y * along)[:, None] * u + noise
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return Dataset(X, y, f"synthetic(n={n},d={d},margin={margin:g})")


def synthetic_split(n_train: int, n_test: int, d: int, margin: float,
                    seed: int) -> tuple[Dataset, Dataset]:
    """Train/test split drawn from one :func:`synthetic` population."""
    ds = synthetic(n_train + n_test, d, margin, seed)
    return ds.subset(slice(0, n_train)), ds.subset(slice(n_train, None))
