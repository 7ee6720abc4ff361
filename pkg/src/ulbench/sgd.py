"""Mini-batch SGD with seeded epoch shuffling and optional step recording.

The batch schedule is fully determined by a 64-bit seed through a PCG64
generator: each epoch draws one permutation of the row positions and
slices it into ceil(n/batch) consecutive batches.  Training always starts
from the zero vector and uses a fixed step size.

A recorded trajectory stores, for every iteration t = 1..T, the post-step
weights w_t together with the gradient of the training objective over the
whole training set at w_t.  The initial point w_0 = 0 is implicit.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .common import substream
from .errors import ConfigError, DataFormatError, NumericalError
from .objective import ObjectiveConfig, gradient

ULTJ_MAGIC = b"ULTJ"
ULTJ_VERSION = 1

# defaults matching the benchmark protocol
DEFAULT_ETA = 1.0
DEFAULT_LAM = 1e-4


@dataclass
class SgdConfig:
    epochs: int
    batch_size: int
    seed: int
    eta: float = DEFAULT_ETA
    record_trajectory: bool = False
    grad_norm_gate: float = 1e-3

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")


@dataclass
class BatchSchedule:
    """Ordered batches of row positions; len(batches) SGD iterations."""

    batches: list
    n: int
    batch_size: int
    epochs: int
    seed: int

    @property
    def iterations(self) -> int:
        return len(self.batches)


def make_schedule(seed: int, n: int, batch_size: int, epochs: int) -> BatchSchedule:
    """Per-epoch seeded permutations sliced into consecutive batches.

    The final batch of an epoch is short when batch_size does not divide n.
    batch_size may not exceed n.
    """
    if n < 1:
        raise ConfigError("schedule needs at least one row")
    if batch_size > n:
        raise ConfigError(f"batch_size {batch_size} exceeds n {n}")
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    rng = substream(seed)
    batches: list[np.ndarray] = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            batches.append(perm[start : start + batch_size].astype(np.int64))
    return BatchSchedule(batches, n, batch_size, epochs, seed)


@dataclass
class TrainingTrajectory:
    """Post-step weights and full-set gradients for each SGD iteration.

    weights[t-1] and gradients[t-1] belong to iteration t, 1-based; the
    zero initial point is not stored.  epochs is None for trajectories
    read back from disk, where only the iteration count survives.
    """

    weights: np.ndarray
    gradients: np.ndarray
    seed: int
    eta: float
    batch_size: int
    epochs: int | None = None

    def __post_init__(self):
        if self.weights.shape != self.gradients.shape or self.weights.ndim != 2:
            raise ConfigError("trajectory weights and gradients must share (T, d) shape")

    @property
    def iterations(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "TrainingTrajectory":
        return TrainingTrajectory(
            self.weights.copy(), self.gradients.copy(), self.seed, self.eta,
            self.batch_size, self.epochs,
        )


def train(
    X: np.ndarray,
    y: np.ndarray,
    obj_cfg: ObjectiveConfig,
    sgd_cfg: SgdConfig,
    schedule: BatchSchedule | None = None,
) -> tuple[np.ndarray, TrainingTrajectory | None]:
    """Run mini-batch SGD from the zero vector over the given schedule.

    With sigma > 0 the trainer optimizes the linearly perturbed objective:
    the perturbation gradient sigma*b/n is scaled by the full training-set
    size, not the batch size, so every batch step estimates the gradient
    of the same perturbed objective.
    """
    n, d = X.shape
    if len(y) != n:
        raise ConfigError("labels do not match feature rows")
    if schedule is None:
        schedule = make_schedule(sgd_cfg.seed, n, sgd_cfg.batch_size, sgd_cfg.epochs)
    if schedule.n != n:
        raise ConfigError(f"schedule built for n={schedule.n}, data has n={n}")
    plain = ObjectiveConfig(lam=obj_cfg.lam)
    noise_g = None
    if obj_cfg.sigma > 0.0:
        if obj_cfg.noise_draw is None:
            raise ConfigError("sigma > 0 requires a noise_draw vector")
        noise_g = obj_cfg.sigma * np.asarray(obj_cfg.noise_draw, dtype=np.float64) / n

    w = np.zeros(d)
    rec_w = rec_g = None
    if sgd_cfg.record_trajectory:
        T = schedule.iterations
        rec_w = np.empty((T, d))
        rec_g = np.empty((T, d))
    for t, batch in enumerate(schedule.batches):
        g = gradient(w, X[batch], y[batch], plain)
        if noise_g is not None:
            g = g + noise_g
        w = w - sgd_cfg.eta * g
        if not np.isfinite(w).all():
            raise NumericalError(f"non-finite weights at iteration {t + 1}")
        if rec_w is not None:
            rec_w[t] = w
            gf = gradient(w, X, y, plain)
            rec_g[t] = gf if noise_g is None else gf + noise_g
    traj = None
    if rec_w is not None:
        traj = TrainingTrajectory(
            rec_w, rec_g, schedule.seed, sgd_cfg.eta, schedule.batch_size, schedule.epochs
        )
    return w, traj


def full_gradient_norm(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> float:
    from .objective import noisy_gradient

    return float(np.linalg.norm(noisy_gradient(w, X, y, cfg)))


def inject_gaussian(w: np.ndarray, sigma: float, noise_draw: np.ndarray) -> np.ndarray:
    """w + sigma * b for a standard normal draw b."""
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    b = np.asarray(noise_draw, dtype=np.float64)
    if b.shape != w.shape:
        raise ConfigError(f"noise draw shape {b.shape} does not match weights {w.shape}")
    return w + sigma * b


# ---------------------------------------------------------------------------
# trajectory file format

_TRAJ_HEADER = struct.Struct("<4sIQQQdQ")  # magic, version, d, T, seed, eta, batch_size


def save_trajectory(traj: TrainingTrajectory, path) -> None:
    """Write a trajectory as a little-endian binary file.

    Header: magic, version, d, T, seed, eta, batch_size.  Body: T records
    of 2*d float64, weights then gradient.
    """
    with open(path, "wb") as f:
        f.write(
            _TRAJ_HEADER.pack(
                ULTJ_MAGIC, ULTJ_VERSION, traj.d, traj.iterations,
                traj.seed, traj.eta, traj.batch_size,
            )
        )
        body = np.empty((traj.iterations, 2 * traj.d))
        body[:, : traj.d] = traj.weights
        body[:, traj.d :] = traj.gradients
        f.write(np.ascontiguousarray(body, dtype="<f8").tobytes())


def load_trajectory(path) -> TrainingTrajectory:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _TRAJ_HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, d, T, seed, eta, batch_size = _TRAJ_HEADER.unpack_from(raw)
    if magic != ULTJ_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != ULTJ_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    need = _TRAJ_HEADER.size + T * 2 * d * 8
    if len(raw) != need:
        raise DataFormatError(f"{path}: expected {need} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_TRAJ_HEADER.size).reshape(T, 2 * d)
    return TrainingTrajectory(
        body[:, :d].astype(np.float64).copy(),
        body[:, d:].astype(np.float64).copy(),
        int(seed), float(eta), int(batch_size), None,
    )
