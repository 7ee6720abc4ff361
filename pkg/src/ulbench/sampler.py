"""Seeded deletion-request sampling over the remaining rows of a view.

Four request distributions combine two class choices with two point
choices.  The class is either drawn uniformly per point (uniform-*) or
fixed to one target class (targeted-*); the point within the class is
either drawn uniformly without replacement (*-random) or taken as the
not-yet-chosen member with the largest feature norm (*-informed), ties
broken toward the lower row index.  The deletion volume is a fraction of
the initial dataset size, truncated to an integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .common import substream
from .data import DatasetView
from .errors import ConfigError, DataFormatError

DISTRIBUTIONS = (
    "uniform-random",
    "uniform-informed",
    "targeted-random",
    "targeted-informed",
)


@dataclass
class DeletionSpec:
    distribution: str
    fraction: float
    seed: int
    target_class: int | None = None

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(
                f"unknown distribution {self.distribution!r}; choose from {DISTRIBUTIONS}"
            )
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError(f"fraction must be in (0, 1], got {self.fraction}")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.target_class is not None and self.target_class < 0:
            raise ConfigError(f"target_class must be >= 0, got {self.target_class}")


def deletion_count(fraction: float, n_init: int) -> int:
    """Number of points to delete: fraction of the initial volume, truncated.

    A small epsilon absorbs binary rounding in fraction * n_init so that
    nominally integral products stay integral.
    """
    if n_init < 1:
        raise ConfigError("n_init must be >= 1")
    m = int(math.floor(fraction * n_init + 1e-9))
    if m < 1:
        raise ConfigError(f"fraction {fraction} of {n_init} rows selects no points")
    return min(m, n_init)


def sample_deletions(view: DatasetView, spec: DeletionSpec) -> np.ndarray:
    """Draw deletion ids from the view's remaining rows, in deletion order.

    The count is always computed against the initial dataset size, so
    repeated rounds of the same fraction delete equal volumes.  Requests
    that would exhaust a class raise.
    """
    base = view.base
    k = base.k
    m = deletion_count(spec.fraction, base.n)
    if m > view.n_remaining:
        raise ConfigError(f"cannot delete {m} of {view.n_remaining} remaining rows")
    if spec.target_class is not None and spec.target_class >= k:
        raise ConfigError(f"target_class {spec.target_class} out of range for k={k}")
    rng = substream(spec.seed)
    targeted = spec.distribution.startswith("targeted")
    informed = spec.distribution.endswith("informed")
    target = None
    if targeted:
        target = spec.target_class if spec.target_class is not None else int(rng.integers(k))

    labels = base.labels
    pools: list[np.ndarray] = []
    counts: list[int] = []
    for c in range(k):
        members = view.remaining[labels[view.remaining] == c]
        if informed:
            norms = np.linalg.norm(base.features[members], axis=1)
            members = members[np.lexsort((members, -norms))]
        pools.append(members.copy())
        counts.append(len(members))

    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        c = target if targeted else int(rng.integers(k))
        left = counts[c]
        if left == 0:
            raise ConfigError(f"class {c} exhausted after {i} deletions (wanted {m})")
        pool = pools[c]
        if informed:
            out[i] = pool[len(pool) - left]  # next entry of the norm-sorted prefix
        else:
            j = int(rng.integers(left))
            out[i] = pool[j]
            pool[j] = pool[left - 1]
        counts[c] = left - 1
    return out


def save_deletion_list(ids: np.ndarray, path) -> None:
    """One integer id per line, in deletion order."""
    Path(path).write_text("".join(f"{int(i)}\n" for i in ids))


def load_deletion_list(path) -> np.ndarray:
    lines = Path(path).read_text().split()
    try:
        return np.array([int(tok) for tok in lines], dtype=np.int64)
    except ValueError as exc:
        raise DataFormatError(f"{path}: deletion list must contain only integers: {exc}")
