"""Small shared utilities: seeded substreams, chunking, timing, results."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent PCG64 generator keyed by (seed, *path).

    Every noise draw in the package goes through this helper so that a
    given (seed, path) pair always produces the same stream regardless of
    how many other draws happened before it.
    """
    return np.random.default_rng([int(seed)] + [int(p) for p in path])


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for an event keyed by (seed, *path).

    Gives every training or unlearning event in a multi-step run its own
    independent noise stream while staying reproducible from one root seed.
    """
    return int(substream(seed, *path).integers(2**63))


def chunk(ids: np.ndarray, size: int) -> list[np.ndarray]:
    """Split ids into consecutive slices of at most `size`, preserving order."""
    if size < 1:
        raise ValueError("chunk size must be >= 1")
    return [ids[i : i + size] for i in range(0, len(ids), size)]


class Stopwatch:
    """Wall-clock timer; use as a context manager, read .seconds after."""

    def __enter__(self) -> "Stopwatch":
        self._t0 = time.perf_counter()
        self.seconds = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.seconds = time.perf_counter() - self._t0


@dataclass
class UnlearnResult:
    """Updated weights plus timing and the parameters that produced them."""

    weights: np.ndarray
    method: str
    seconds: float
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
