"""Deletion lifecycle management.

A pipeline owns a trained model and serves predictions while deletion
requests arrive.  Each request is applied with the configured unlearning
algorithm, the updated model is gated on test accuracy and on an
estimated certification disparity, and the pipeline either employs the
updated model or falls back to a full retrain.  An auditor can at any
point retrain from scratch and measure the true disparity on everything
deleted so far.

The disparity estimate follows a learned proportionality: at calibration
time one deletion of fraction theta is executed both ways (unlearn and
retrain), and the ratio c = AccDis / AccErr is kept.  Later, the
observable test-accuracy drift of an updated model is scaled by c to
predict the unobservable disparity on the deleted points.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .common import derive_seed
from .data import DatasetView, LabeledDataset, delete_points, full_view, materialize, take
from .errors import ConfigError
from .methods import (
    HIGHEST_EFFICIENCY_TAU,
    MethodParams,
    TrainedModel,
    check_method,
    model_accuracy_counts,
    model_predict,
    train_method,
    unlearn_method,
)
from .metrics import sape
from .sampler import DeletionSpec, sample_deletions
from .sgd import SgdConfig

# substream tags reserved for pipeline-level noise derivation
_TAG_EVENT = 60
_TAG_CALIBRATE = 61
_TAG_AUDIT = 62


@dataclass
class Thresholds:
    """Gates for employing an updated model instead of retraining."""

    min_acc_test: float = 0.0
    max_est_disparity: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.min_acc_test <= 1.0:
            raise ConfigError(
                f"min_acc_test must be in [0, 1], got {self.min_acc_test}"
            )
        if not np.isfinite(self.max_est_disparity) or self.max_est_disparity < 0:
            raise ConfigError(
                f"max_est_disparity must be a finite percentage >= 0, got {self.max_est_disparity}"
            )


@dataclass
class RetrainEstimator:
    """Learned proportion between test-accuracy drift and deleted-set disparity."""

    c: float
    theta: float
    safety: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0:
            raise ConfigError(f"c must be finite and >= 0, got {self.c}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must be in (0, 1), got {self.theta}")
        if not np.isfinite(self.safety) or self.safety <= 0:
            raise ConfigError(f"safety must be finite and > 0, got {self.safety}")


def _check_acc(value, name: str):
    if isinstance(value, tuple):
        return
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be in [0, 1], got {value}")


def estimate_disparity(est: RetrainEstimator, acc_test_init, acc_test_updated) -> float:
    """Predicted disparity percentage for an updated model.

    Accuracies may be floats or exact (correct, total) count pairs.
    """
    _check_acc(acc_test_init, "acc_test_init")
    _check_acc(acc_test_updated, "acc_test_updated")
    return est.safety * est.c * sape(acc_test_init, acc_test_updated)


def fit_batch_size(sgd_cfg: SgdConfig, n: int) -> SgdConfig:
    """Cap the batch size at the current row count.

    Deletions shrink the dataset, so a full-batch (or near-full) config
    from training time can exceed the rows left at retraining time.
    """
    if sgd_cfg.batch_size <= n:
        return sgd_cfg
    return replace(sgd_cfg, batch_size=n)


def retrain_baseline(
    method: str,
    view: DatasetView,
    lam: float,
    sgd_cfg: SgdConfig,
    params: MethodParams,
) -> TrainedModel:
    """Train from scratch on the remaining rows of view.

    The remaining rows are first copied into a standalone dataset so every
    method, including replay training with its full-view requirement, sees
    the same rebased row universe.
    """
    base = materialize(view)
    return train_method(
        method, full_view(base), lam, fit_batch_size(sgd_cfg, base.n), params
    )


def calibrate_c(
    view: DatasetView,
    test_ds: LabeledDataset,
    method: str,
    lam: float,
    sgd_cfg: SgdConfig,
    params: MethodParams,
    theta: float = 0.5,
    seed: int = 0,
) -> RetrainEstimator:
    """Learn the disparity proportion c from one calibration deletion.

    Trains an initial model, deletes a targeted-random fraction theta, and
    runs both the unlearning update and a full retrain.  c is the measured
    disparity on the deleted points divided by the updated model's
    test-accuracy drift.  The unlearning method runs at its highest
    efficiency setting so the estimate is conservative for slower ones.
    """
    check_method(method)
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"theta must be in (0, 1), got {theta}")
    sgd_cfg = fit_batch_size(sgd_cfg, view.n_remaining)
    cal_params = replace(params, tau=HIGHEST_EFFICIENCY_TAU[method])

    model = train_method(method, view, lam, sgd_cfg, cal_params)
    init_counts = model_accuracy_counts(model.weights, test_ds.features, test_ds.labels)

    spec = DeletionSpec(distribution="targeted-random", fraction=theta, seed=seed)
    ids = sample_deletions(view, spec)
    updated, _, _ = unlearn_method(method, model, view, ids, lam, cal_params)
    upd_counts = model_accuracy_counts(updated.weights, test_ds.features, test_ds.labels)

    after = delete_points(view, ids)
    retrain_params = replace(
        cal_params, noise_seed=derive_seed(cal_params.noise_seed, _TAG_CALIBRATE, 0)
    )
    retrained = retrain_baseline(method, after, lam, sgd_cfg, retrain_params)

    del_X, del_y = take(view.base, ids)
    dis = sape(
        model_accuracy_counts(retrained.weights, del_X, del_y),
        model_accuracy_counts(updated.weights, del_X, del_y),
    )
    err_init = sape(init_counts, upd_counts)
    if err_init == 0.0:
        raise ConfigError(
            "calibration deletion left test accuracy unchanged; "
            "raise theta so the drift is measurable"
        )
    return RetrainEstimator(c=dis / err_init, theta=theta)


class Pipeline:
    """Train, serve, unlearn, gate, retrain; with an auditable deletion record.

    Events are plain dicts with keys event, timestamp, m_cumulative,
    acc_test, est_disparity, decision, one per lifecycle transition,
    suitable for JSON-lines emission.
    """

    def __init__(
        self,
        method: str,
        view: DatasetView,
        test_ds: LabeledDataset,
        lam: float,
        sgd_cfg: SgdConfig,
        params: MethodParams,
        thresholds: Thresholds,
        estimator: RetrainEstimator,
        recalibrate: bool = False,
    ):
        check_method(method)
        if test_ds.d != view.base.d:
            raise ConfigError(
                f"test dimension {test_ds.d} does not match training dimension {view.base.d}"
            )
        self.method = method
        self.lam = lam
        self.sgd_cfg = fit_batch_size(sgd_cfg, view.n_remaining)
        self.params = params
        self.thresholds = thresholds
        self.estimator = estimator
        self.recalibrate = recalibrate
        self.test_ds = test_ds
        self.events: list[dict] = []
        self._deleted_X: list[np.ndarray] = []
        self._deleted_y: list[np.ndarray] = []

        if method == "deltagrad" and view.n_remaining != view.base.n:
            view = full_view(materialize(view))
        self.view = view
        self.model = train_method(method, view, lam, self.sgd_cfg, params)
        self._acc_test = model_accuracy_counts(
            self.model.weights, test_ds.features, test_ds.labels
        )
        self._acc_test_init = self._acc_test
        self._log("train", est_disparity=0.0, decision="employ")

    # -- serving ---------------------------------------------------------

    def predict(self, X: np.ndarray) -> np.ndarray:
        return model_predict(self.model.weights, np.asarray(X, dtype=np.float64))

    @property
    def m_cumulative(self) -> int:
        return int(sum(len(y) for y in self._deleted_y))

    @property
    def acc_test(self) -> float:
        c, t = self._acc_test
        return c / t

    def deleted_dataset(self) -> tuple[np.ndarray, np.ndarray]:
        """Everything deleted so far, as materialized arrays."""
        if not self._deleted_y:
            raise ConfigError("no points have been deleted yet")
        return np.concatenate(self._deleted_X), np.concatenate(self._deleted_y)

    def _log(self, event: str, est_disparity: float, decision: str):
        self.events.append(
            {
                "event": event,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "m_cumulative": self.m_cumulative,
                "acc_test": self.acc_test,
                "est_disparity": float(est_disparity),
                "decision": decision,
            }
        )

    def _event_params(self, tag: int) -> MethodParams:
        # fresh, deterministic noise draw per lifecycle event
        return replace(
            self.params,
            noise_seed=derive_seed(self.params.noise_seed, tag, len(self.events)),
        )

    # -- lifecycle -------------------------------------------------------

    def step_deletion(self, deleted_ids) -> str:
        """Apply one deletion request; returns the decision taken.

        The unlearned model is employed iff its test accuracy stays at or
        above min_acc_test and the estimated disparity stays at or below
        max_est_disparity; otherwise the model is retrained from scratch
        on the remaining rows.
        """
        ids = np.asarray(deleted_ids, dtype=np.int64)
        event_params = self._event_params(_TAG_EVENT)
        updated, _, _ = unlearn_method(
            self.method, self.model, self.view, ids, self.lam, event_params
        )
        new_view = delete_points(self.view, ids)
        del_X, del_y = take(self.view.base, ids)
        self._deleted_X.append(del_X)
        self._deleted_y.append(del_y)

        upd_counts = model_accuracy_counts(
            updated.weights, self.test_ds.features, self.test_ds.labels
        )
        est = estimate_disparity(self.estimator, self._acc_test_init, upd_counts)
        acc_upd = upd_counts[0] / upd_counts[1]
        employ = (
            acc_upd >= self.thresholds.min_acc_test
            and est <= self.thresholds.max_est_disparity
        )
        decision = "employ" if employ else "retrain"

        if employ:
            self.model = updated
            self.view = new_view
            self._acc_test = upd_counts
            self._log("unlearn", est_disparity=est, decision=decision)
        else:
            self._log("unlearn", est_disparity=est, decision=decision)
            self._retrain(new_view)
        return decision

    def _retrain(self, view: DatasetView):
        base = materialize(view)
        self.view = full_view(base)
        self.model = train_method(
            self.method, self.view, self.lam, fit_batch_size(self.sgd_cfg, base.n),
            self._event_params(_TAG_EVENT),
        )
        self._acc_test = model_accuracy_counts(
            self.model.weights, self.test_ds.features, self.test_ds.labels
        )
        self._acc_test_init = self._acc_test
        if self.recalibrate:
            self.estimator = calibrate_c(
                self.view, self.test_ds, self.method, self.lam, self.sgd_cfg,
                self.params, theta=self.estimator.theta,
                seed=derive_seed(self.params.noise_seed, _TAG_CALIBRATE, len(self.events)),
            )
        self._log("retrain", est_disparity=0.0, decision="employ")

    def audit(self, threshold: float) -> dict:
        """Measure the true disparity on everything deleted so far.

        Retrains from scratch with the employed noise level and compares
        deleted-set accuracy against the currently employed model.  Does
        not change the employed model.
        """
        if not np.isfinite(threshold) or threshold < 0:
            raise ConfigError(f"threshold must be a finite percentage >= 0, got {threshold}")
        del_X, del_y = self.deleted_dataset()
        retrained = retrain_baseline(
            self.method, self.view, self.lam, self.sgd_cfg,
            self._event_params(_TAG_AUDIT),
        )
        measured = sape(
            model_accuracy_counts(retrained.weights, del_X, del_y),
            model_accuracy_counts(self.model.weights, del_X, del_y),
        )
        passed = measured <= threshold
        self._log("audit", est_disparity=measured, decision="pass" if passed else "fail")
        return {"pass": passed, "measured_acc_dis": measured}
