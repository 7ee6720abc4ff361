"""Dataset ingestion, normalization, caching, and deletion bookkeeping.

Datasets are dense row-major float64 feature matrices with contiguous
integer class ids; the original source labels are kept alongside so class
ids are stable across runs.  A DatasetView partitions the row indices of a
dataset into remaining and deleted sets without copying the features.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .common import substream
from .errors import ConfigError, DataFormatError, NumericalError

ULDS_MAGIC = b"ULDS"
ULDS_VERSION = 1

# max row norm this close to 1 is treated as already normalized, which makes
# normalization exactly idempotent
_NORM_SNAP = 4 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class LabeledDataset:
    """Dense labeled dataset.

    features: (n, d) float64, finite.
    labels: (n,) int64 class ids in {0..k-1}.
    label_values: original source label per class id, length k.
    """

    features: np.ndarray
    labels: np.ndarray
    label_values: tuple

    def __post_init__(self):
        X, y = self.features, self.labels
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ConfigError(f"features must be a non-empty 2-D array, got shape {X.shape}")
        if X.dtype != np.float64:
            raise ConfigError(f"features must be float64, got {X.dtype}")
        if not np.isfinite(X).all():
            raise ConfigError("features contain non-finite values")
        if y.shape != (X.shape[0],):
            raise ConfigError(f"labels shape {y.shape} does not match n={X.shape[0]}")
        k = len(self.label_values)
        if k < 1:
            raise ConfigError("label_values must name at least one class")
        if y.min() < 0 or y.max() >= k:
            raise ConfigError(f"class ids must lie in [0, {k}), got [{y.min()}, {y.max()}]")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int:
        return len(self.label_values)

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.features, axis=1)


def make_dataset(features: np.ndarray, labels: np.ndarray, label_values=None) -> LabeledDataset:
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if label_values is None:
        label_values = tuple(float(c) for c in range(int(y.max()) + 1 if y.size else 0))
    return LabeledDataset(X, y, tuple(label_values))


@dataclass(frozen=True)
class DatasetView:
    """Partition of a dataset's row indices into remaining and deleted sets.

    Both index arrays are sorted ascending; together they cover {0..n-1}
    exactly once.  Views are immutable; delete_points returns a new view.
    """

    base: LabeledDataset
    remaining: np.ndarray
    deleted: np.ndarray

    def __post_init__(self):
        n = self.base.n
        rem, dele = self.remaining, self.deleted
        if len(rem) + len(dele) != n:
            raise ConfigError("remaining and deleted must cover all rows")
        merged = np.concatenate([rem, dele])
        if len(np.unique(merged)) != n or (n and (merged.min() < 0 or merged.max() >= n)):
            raise ConfigError("remaining and deleted must partition {0..n-1}")

    @property
    def n_remaining(self) -> int:
        return len(self.remaining)

    @property
    def n_deleted(self) -> int:
        return len(self.deleted)


def full_view(ds: LabeledDataset) -> DatasetView:
    return DatasetView(ds, np.arange(ds.n, dtype=np.int64), np.empty(0, dtype=np.int64))


def delete_points(view: DatasetView, ids) -> DatasetView:
    """Move ids from the remaining set to the deleted set.

    ids must be unique, non-empty, and currently remaining.  Deleting every
    remaining row is allowed; trainers reject the resulting empty view.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ConfigError("delete_points requires at least one id")
    if len(np.unique(ids)) != len(ids):
        raise ConfigError("deletion ids must be unique")
    if not np.isin(ids, view.remaining).all():
        raise ConfigError("deletion ids must be drawn from the remaining set")
    remaining = np.setdiff1d(view.remaining, ids)
    deleted = np.union1d(view.deleted, ids)
    return DatasetView(view.base, remaining, deleted)


def materialize(view: DatasetView) -> LabeledDataset:
    """Copy the remaining rows into a standalone dataset.

    Replay-style unlearning replays batch schedules over base row ids, so
    a model retrained mid-stream needs the remaining rows rebased into a
    fresh contiguous dataset before new trajectories are recorded.
    """
    if view.n_remaining == 0:
        raise ConfigError("cannot materialize an empty remaining set")
    base = view.base
    return LabeledDataset(
        base.features[view.remaining].copy(),
        base.labels[view.remaining].copy(),
        tuple(base.label_values),
    )


def check_deletion_ids(view: DatasetView, deleted_ids) -> np.ndarray:
    """Validate a deletion request: non-empty, unique, all currently remaining."""
    ids = np.asarray(deleted_ids, dtype=np.int64)
    if ids.size == 0:
        raise ConfigError("deletion set is empty")
    if len(np.unique(ids)) != len(ids):
        raise ConfigError("deletion ids must be unique")
    if not np.isin(ids, view.remaining).all():
        raise ConfigError("deletion ids must be remaining rows of the view")
    return ids


def signed_labels(ds: LabeledDataset, positive_class: int = 1) -> np.ndarray:
    """Map class ids to {-1.0, +1.0} with positive_class mapped to +1."""
    if not 0 <= positive_class < ds.k:
        raise ConfigError(f"positive_class {positive_class} out of range for k={ds.k}")
    return np.where(ds.labels == positive_class, 1.0, -1.0)


def take(ds: LabeledDataset, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Materialize (features, class ids) for the given row indices."""
    return ds.features[idx], ds.labels[idx]


def base_signed(base: LabeledDataset, y: np.ndarray | None = None) -> np.ndarray:
    """Signed label vector over all base rows.

    y overrides the vector (for one-vs-rest sub-tasks); by default class 1
    of a two-class dataset is the positive class.
    """
    if y is not None:
        out = np.asarray(y, dtype=np.float64)
        if out.shape != (base.n,):
            raise ConfigError(f"label override shape {out.shape} does not match n={base.n}")
        return out
    if base.k != 2:
        raise ConfigError(f"binary task needs k=2 (got k={base.k}); pass y explicitly")
    return signed_labels(base, positive_class=1)


def binary_task(view: DatasetView, y: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Features and signed labels of the view's remaining rows."""
    signed = base_signed(view.base, y)
    return view.base.features[view.remaining], signed[view.remaining]


# ---------------------------------------------------------------------------
# text format parsing


def parse_libsvm(source: Iterable[str] | IO[str], expected_dim: int | None = None) -> LabeledDataset:
    """Parse sparse `label idx:val` lines with 1-based ascending indices.

    Absent indices are zeros.  Labels are remapped to contiguous class ids
    in ascending order of the original label value, and the mapping is kept
    on the returned dataset.  Malformed lines raise with their line number.
    """
    rows: list[list[tuple[int, float]]] = []
    raw_labels: list[float] = []
    max_idx = 0
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        try:
            raw_labels.append(float(parts[0]))
        except ValueError:
            raise DataFormatError(f"line {lineno}: bad label token {parts[0]!r}")
        pairs: list[tuple[int, float]] = []
        prev = 0
        for tok in parts[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataFormatError(f"line {lineno}: bad feature token {tok!r}")
            if idx < 1:
                raise DataFormatError(f"line {lineno}: index {idx} is not 1-based")
            if idx <= prev:
                raise DataFormatError(f"line {lineno}: indices must be strictly ascending")
            if expected_dim is not None and idx > expected_dim:
                raise DataFormatError(
                    f"line {lineno}: index {idx} exceeds expected dimension {expected_dim}"
                )
            pairs.append((idx, val))
            prev = idx
        max_idx = max(max_idx, prev)
        rows.append(pairs)
    if not rows:
        raise DataFormatError("empty dataset: no data lines found")
    d = expected_dim if expected_dim is not None else max_idx
    if d == 0:
        raise DataFormatError("no feature indices present and no expected dimension given")
    X = np.zeros((len(rows), d), dtype=np.float64)
    for i, pairs in enumerate(rows):
        for idx, val in pairs:
            X[i, idx - 1] = val
    values = sorted(set(raw_labels))
    to_id = {v: c for c, v in enumerate(values)}
    y = np.array([to_id[v] for v in raw_labels], dtype=np.int64)
    return LabeledDataset(X, y, tuple(values))


def serialize_libsvm(ds: LabeledDataset, stream: IO[str]) -> None:
    """Write the dataset back as `label idx:val` text, skipping zeros.

    Uses shortest round-trip float formatting so parse(serialize(ds))
    reproduces the dataset exactly.
    """
    for i in range(ds.n):
        label = ds.label_values[ds.labels[i]]
        toks = [repr(float(label))]
        row = ds.features[i]
        for j in np.nonzero(row)[0]:
            toks.append(f"{j + 1}:{float(row[j])!r}")
        stream.write(" ".join(toks) + "\n")


def filter_binary(ds: LabeledDataset, classes: tuple) -> LabeledDataset:
    """Keep rows whose original source label is in `classes`, remapped to {0,1}.

    The pair order defines the mapping: classes[0] -> 0, classes[1] -> 1.
    """
    if len(classes) != 2 or classes[0] == classes[1]:
        raise ConfigError(f"binary class pair must be two distinct labels, got {classes!r}")
    wanted = [float(c) for c in classes]
    for c in wanted:
        if c not in ds.label_values:
            raise ConfigError(f"source label {c} not present in dataset labels {ds.label_values}")
    src_ids = [ds.label_values.index(c) for c in wanted]
    mask0 = ds.labels == src_ids[0]
    mask1 = ds.labels == src_ids[1]
    keep = np.flatnonzero(mask0 | mask1)
    y = np.where(ds.labels[keep] == src_ids[1], 1, 0).astype(np.int64)
    return LabeledDataset(np.ascontiguousarray(ds.features[keep]), y, (wanted[0], wanted[1]))


# ---------------------------------------------------------------------------
# normalization


def max_l2_normalize(ds: LabeledDataset) -> tuple[LabeledDataset, float]:
    """Divide all rows by the maximum row L2 norm so every norm is <= 1.

    Returns the scaled dataset and the scale.  A max norm within a few ulp
    of 1 is treated as exactly 1, which makes the operation idempotent.
    All-zero features cannot be normalized.
    """
    norms = ds.row_norms()
    scale = float(norms.max())
    if scale == 0.0:
        raise NumericalError("cannot normalize: all feature rows are zero")
    if abs(scale - 1.0) <= _NORM_SNAP:
        return ds, 1.0
    out = LabeledDataset(ds.features / scale, ds.labels, ds.label_values)
    return out, scale


def apply_scale(ds: LabeledDataset, scale: float) -> LabeledDataset:
    """Divide features by a scale computed elsewhere (the training split's)."""
    if scale <= 0:
        raise ConfigError(f"scale must be positive, got {scale}")
    if scale == 1.0:
        return ds
    return LabeledDataset(ds.features / scale, ds.labels, ds.label_values)


# ---------------------------------------------------------------------------
# binary cache

_HEADER = struct.Struct("<4sIQQI")  # magic, version, n, d, k


def save_cache(ds: LabeledDataset, path, scale: float | None = None) -> None:
    """Write the dataset to a little-endian binary cache file.

    Layout: magic, version, n, d, k header; n*d float64 features row-major;
    n int32 class ids.  Original label values (and the normalization scale,
    when given) go to a JSON sidecar next to the file.
    """
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(ULDS_MAGIC, ULDS_VERSION, ds.n, ds.d, ds.k))
        f.write(np.ascontiguousarray(ds.features, dtype="<f8").tobytes())
        f.write(ds.labels.astype("<i4").tobytes())
    meta = {"label_values": list(ds.label_values)}
    if scale is not None:
        meta["scale"] = scale
    with open(str(path) + ".meta.json", "w") as f:
        json.dump(meta, f)
        f.write("\n")


def load_cache(path) -> LabeledDataset:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n, d, k = _HEADER.unpack_from(raw)
    if magic != ULDS_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != ULDS_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    need = _HEADER.size + n * d * 8 + n * 4
    if len(raw) != need:
        raise DataFormatError(f"{path}: expected {need} bytes, found {len(raw)}")
    X = np.frombuffer(raw, dtype="<f8", count=n * d, offset=_HEADER.size).reshape(n, d)
    y = np.frombuffer(raw, dtype="<i4", count=n, offset=_HEADER.size + n * d * 8)
    meta_path = Path(str(path) + ".meta.json")
    label_values: tuple | None = None
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        label_values = tuple(meta.get("label_values", ())) or None
    if label_values is None:
        label_values = tuple(float(c) for c in range(k))
    if len(label_values) != k:
        raise DataFormatError(f"{path}: sidecar lists {len(label_values)} labels, header says {k}")
    return LabeledDataset(X.astype(np.float64).copy(), y.astype(np.int64), label_values)


def cache_scale(path) -> float | None:
    """Normalization scale recorded in a cache file's sidecar, if any."""
    meta_path = Path(str(path) + ".meta.json")
    if not meta_path.exists():
        return None
    meta = json.loads(meta_path.read_text())
    return meta.get("scale")


# ---------------------------------------------------------------------------
# synthetic data


def synthetic_blobs(
    n: int,
    d: int,
    separation: float = 3.0,
    class_ratio: float = 0.5,
    noise: float = 1.0,
    seed: int = 0,
    bias_column: bool = True,
) -> LabeledDataset:
    """Two Gaussian blobs for a binary task, unnormalized.

    Class means sit at +-separation/2 along the first coordinate with
    isotropic noise.  When bias_column is set the last of the d columns is
    the constant 1, giving the linear model an intercept; d counts all
    columns either way.  Rows are shuffled by the seed.
    """
    if n < 2 or d < 1:
        raise ConfigError(f"need n >= 2 and d >= 1, got n={n} d={d}")
    if not 0.0 < class_ratio < 1.0:
        raise ConfigError(f"class_ratio must be in (0,1), got {class_ratio}")
    if noise <= 0 or separation < 0:
        raise ConfigError("noise must be positive and separation non-negative")
    g_dims = d - 1 if bias_column else d
    if g_dims < 1:
        raise ConfigError("need at least one non-bias column")
    rng = substream(seed)
    n0 = int(round(n * class_ratio))
    n0 = min(max(n0, 1), n - 1)
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n - n0, dtype=np.int64)])
    X = rng.standard_normal((n, g_dims)) * noise
    X[:, 0] += np.where(y == 0, -separation / 2.0, separation / 2.0)
    if bias_column:
        X = np.hstack([X, np.ones((n, 1))])
    order = rng.permutation(n)
    return make_dataset(X[order], y[order], (0.0, 1.0))


def synthetic_split(
    n_train: int,
    n_test: int,
    d: int,
    separation: float = 3.0,
    class_ratio: float = 0.5,
    noise: float = 1.0,
    seed: int = 0,
    bias_column: bool = True,
    normalize: bool = True,
) -> tuple[LabeledDataset, LabeledDataset, float]:
    """Train/test blob pair; the training split's max-norm scale is applied to both."""
    train = synthetic_blobs(n_train, d, separation, class_ratio, noise, seed, bias_column)
    test = synthetic_blobs(n_test, d, separation, class_ratio, noise, seed + 1, bias_column)
    if not normalize:
        return train, test, 1.0
    train, scale = max_l2_normalize(train)
    return train, apply_scale(test, scale), scale
