"""Uniform dispatch over the three unlearning methods, with one-vs-rest.

A trained model is a (C, d) weight matrix: one row for a two-class task,
k rows of one-vs-rest classifiers otherwise.  The efficiency knob tau is
method specific: for the Newton-correction methods it divides the deleted
volume into unlearning mini-batches of size max(1, m // tau), so tau=1
(one batch of all m points) is the fastest setting; for replay unlearning
tau is the exactness period, where larger values replay fewer exact
iterations and run faster.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .common import Stopwatch, derive_seed
from .data import DatasetView, LabeledDataset
from .deltagrad import DeltaGradConfig, dg_train, dg_unlearn
from .errors import ConfigError
from .fisher import FisherConfig, fisher_train, fisher_unlearn
from .influence import InfluenceConfig, influence_train, influence_unlearn
from .objective import predict_classes
from .sgd import BatchSchedule, SgdConfig, TrainingTrajectory, make_schedule

METHODS = ("fisher", "influence", "deltagrad")

# fastest setting per method: one Newton batch over all deleted points,
# or the coarsest exactness period of the replay sweep grid
HIGHEST_EFFICIENCY_TAU = {"fisher": 1, "influence": 1, "deltagrad": 100}

DEFAULT_TAU = {"fisher": 1, "influence": 1, "deltagrad": 2}


@dataclass
class MethodParams:
    """Noise level and efficiency knob shared by train and unlearn calls."""

    sigma: float = 0.0
    tau: int | None = None
    noise_seed: int = 0
    burn_in: int = 0
    history: int = 2

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.tau is not None and self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if self.burn_in < 0:
            raise ConfigError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.history < 1:
            raise ConfigError(f"history must be >= 1, got {self.history}")


@dataclass
class TrainedModel:
    weights: np.ndarray  # (C, d)
    method: str
    seconds: float
    trajectories: list[TrainingTrajectory] | None = None
    schedule: BatchSchedule | None = None

    @property
    def classifiers(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]


def check_method(method: str) -> str:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    return method


def resolve_tau(method: str, tau: int | None) -> int:
    check_method(method)
    if tau is None:
        return DEFAULT_TAU[method]
    if tau < 1:
        raise ConfigError(f"tau must be >= 1, got {tau}")
    return int(tau)


def unlearn_minibatch(m: int, tau: int) -> int:
    """Newton-correction batch size for deleting m points at divisor tau."""
    if m < 1:
        raise ConfigError("no deleted points to split into batches")
    return max(1, m // tau)


def classifier_tasks(base: LabeledDataset) -> list[np.ndarray | None]:
    """Signed label vectors, one per classifier.

    A two-class dataset trains a single classifier on its default signed
    labels; more classes get one one-vs-rest vector each.
    """
    if base.k <= 2:
        return [None]
    return [np.where(base.labels == c, 1.0, -1.0) for c in range(base.k)]


def _class_noise_seed(noise_seed: int, n_tasks: int, c: int) -> int:
    # the single-classifier case keeps the caller's seed so its draws are
    # exactly the ones the per-method functions document
    if n_tasks == 1:
        return noise_seed
    return derive_seed(noise_seed, 50, c)


def train_method(
    method: str,
    view: DatasetView,
    lam: float,
    sgd_cfg: SgdConfig,
    params: MethodParams,
) -> TrainedModel:
    """Train one model per classifier task with the method's own algorithm."""
    check_method(method)
    tasks = classifier_tasks(view.base)
    rows = []
    trajectories: list[TrainingTrajectory] | None = None
    schedule = None
    if method == "deltagrad":
        if view.n_remaining != view.base.n:
            raise ConfigError(
                "replay training needs a full view; materialize the remaining rows first"
            )
        if not sgd_cfg.record_trajectory:
            sgd_cfg = replace(sgd_cfg, record_trajectory=True)
        trajectories = []
        schedule = make_schedule(
            sgd_cfg.seed, view.base.n, sgd_cfg.batch_size, sgd_cfg.epochs
        )
    with Stopwatch() as sw:
        for c, task in enumerate(tasks):
            seed_c = _class_noise_seed(params.noise_seed, len(tasks), c)
            if method == "fisher":
                w = fisher_train(
                    view, lam, sgd_cfg, FisherConfig(sigma=params.sigma, noise_seed=seed_c), y=task
                )
            elif method == "influence":
                w = influence_train(
                    view, lam, sgd_cfg,
                    InfluenceConfig(sigma=params.sigma, noise_seed=seed_c), y=task,
                )
            else:
                cfg = DeltaGradConfig(
                    t0_period=resolve_tau(method, params.tau),
                    burn_in=params.burn_in,
                    history=params.history,
                    sigma=params.sigma,
                    noise_seed=seed_c,
                )
                w, traj = dg_train(view, lam, sgd_cfg, cfg, y=task)
                trajectories.append(traj)
            rows.append(w)
    return TrainedModel(
        weights=np.stack(rows),
        method=method,
        seconds=sw.seconds,
        trajectories=trajectories,
        schedule=schedule,
    )


def unlearn_method(
    method: str,
    model: TrainedModel,
    view: DatasetView,
    deleted_ids,
    lam: float,
    params: MethodParams,
) -> tuple[TrainedModel, float, dict]:
    """Remove deleted_ids from every classifier; returns (model', seconds, diagnostics).

    Seconds sum the per-classifier unlearning times reported by the
    underlying algorithms.
    """
    check_method(method)
    if method != model.method:
        raise ConfigError(f"model was trained with {model.method!r}, not {method!r}")
    tasks = classifier_tasks(view.base)
    if len(tasks) != model.classifiers:
        raise ConfigError(
            f"model has {model.classifiers} classifiers, dataset needs {len(tasks)}"
        )
    ids = np.asarray(deleted_ids, dtype=np.int64)
    tau = resolve_tau(method, params.tau)
    rows = []
    seconds = 0.0
    diagnostics: dict = {}
    new_trajectories: list[TrainingTrajectory] | None = None
    if method == "deltagrad":
        if model.trajectories is None or model.schedule is None:
            raise ConfigError("replay unlearning needs the trajectories recorded at training")
        new_trajectories = []
    for c, task in enumerate(tasks):
        seed_c = _class_noise_seed(params.noise_seed, len(tasks), c)
        if method == "fisher":
            result = fisher_unlearn(
                model.weights[c], view, ids, lam,
                FisherConfig(sigma=params.sigma, minibatch=unlearn_minibatch(len(ids), tau),
                             noise_seed=seed_c),
                y=task,
            )
        elif method == "influence":
            result = influence_unlearn(
                model.weights[c], view, ids, lam,
                InfluenceConfig(sigma=params.sigma, minibatch=unlearn_minibatch(len(ids), tau),
                                noise_seed=seed_c),
                y=task,
            )
        else:
            cfg = DeltaGradConfig(
                t0_period=tau,
                burn_in=params.burn_in,
                history=params.history,
                sigma=params.sigma,
                noise_seed=seed_c,
            )
            result, new_traj = dg_unlearn(
                model.trajectories[c], view, ids, lam, model.schedule, cfg, y=task
            )
            new_trajectories.append(new_traj)
        rows.append(result.weights)
        seconds += result.seconds
        if len(tasks) == 1:
            diagnostics = result.diagnostics
        else:
            diagnostics[f"class_{c}"] = result.diagnostics
    updated = TrainedModel(
        weights=np.stack(rows),
        method=method,
        seconds=seconds,
        trajectories=new_trajectories,
        schedule=model.schedule,
    )
    return updated, seconds, diagnostics


def model_scores(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    if weights.ndim != 2 or X.shape[1] != weights.shape[1]:
        raise ConfigError(
            f"weights shape {weights.shape} does not match feature dimension {X.shape[1]}"
        )
    return X @ weights.T


def model_predict(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Class ids from a (C, d) weight matrix."""
    if weights.shape[0] == 1:
        return predict_classes(weights[0], X)
    return np.argmax(model_scores(weights, X), axis=1).astype(np.int64)


def model_accuracy_counts(weights: np.ndarray, X: np.ndarray, labels: np.ndarray) -> tuple[int, int]:
    if len(X) == 0:
        raise ConfigError("accuracy requested on an empty point set")
    pred = model_predict(weights, X)
    return int(np.sum(pred == labels)), int(len(X))
