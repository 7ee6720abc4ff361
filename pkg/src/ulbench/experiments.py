"""Experiment runners: deletion studies, trade-off sweeps, pipeline replays.

Each runner takes a validated config model and returns plain data
(row lists, report objects, event dicts) that the CLI and the service
serialize.  Output rows are sorted by their provenance fields and floats
are emitted with round-trip formatting, so rerunning a config reproduces
the non-timing output byte for byte.
"""
from __future__ import annotations

import json
import statistics
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .common import Stopwatch, derive_seed
from .data import (
    LabeledDataset,
    apply_scale,
    binary_task,
    cache_scale,
    delete_points,
    filter_binary,
    full_view,
    load_cache,
    max_l2_normalize,
    parse_libsvm,
    save_cache,
    synthetic_split,
    take,
)
from .defaults import LAM, defaults_for
from .errors import ConfigError
from .methods import (
    METHODS,
    HIGHEST_EFFICIENCY_TAU,
    MethodParams,
    classifier_tasks,
    model_accuracy_counts,
    train_method,
    unlearn_method,
)
from .metrics import CSV_COLUMNS, EvalReport, acc_dis, acc_err, provenance_key, speedup
from .objective import ObjectiveConfig
from .pipeline import (
    Pipeline,
    RetrainEstimator,
    Thresholds,
    calibrate_c,
    fit_batch_size,
    retrain_baseline,
)
from .sampler import DISTRIBUTIONS, DeletionSpec, sample_deletions
from .sgd import SgdConfig, save_trajectory, train

SIGMA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
TAU_GRIDS = {
    "fisher": (1, 2, 4, 8),
    "influence": (1, 2, 4, 8),
    "deltagrad": (2, 5, 50, 100),
}
STUDY_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)

STUDY_COLUMNS = (
    "dataset",
    "del_dist",
    "del_fraction",
    "m",
    "seed",
    "acc_test",
    "acc_del",
    "t_retrain_ms",
)

# substream tags for experiment-level seed derivation
_TAG_MODEL_NOISE = 80
_TAG_RETRAIN_NOISE = 81
_TAG_STREAM = 90


def build_config(model_cls, data: dict):
    """Validate a raw mapping into a config model, as a config error."""
    try:
        return model_cls.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"{model_cls.__name__}.{loc}: {first['msg']}") from exc


class DatasetConfig(BaseModel):
    """Where the train/test split comes from.

    blobs generates a two-Gaussian synthetic split; libsvm parses sparse
    text files and normalizes by the training split's max row norm; cache
    loads the binary files produced by ingest, already normalized.
    """

    kind: Literal["blobs", "libsvm", "cache"] = "blobs"
    name: str = "blobs"
    n_train: int = Field(default=1000, ge=2)
    n_test: int = Field(default=500, ge=1)
    d: int = Field(default=10, ge=1)
    separation: float = 3.0
    class_ratio: float = Field(default=0.5, gt=0.0, lt=1.0)
    noise: float = Field(default=1.0, gt=0.0)
    seed: int = Field(default=0, ge=0)
    train_path: str | None = None
    test_path: str | None = None
    classes: tuple[float, float] | None = None
    normalize: bool = True

    @model_validator(mode="after")
    def _paths_for_files(self):
        if self.kind in ("libsvm", "cache"):
            if not self.train_path or not self.test_path:
                raise ValueError(f"{self.kind} datasets need train_path and test_path")
        return self


def _open_text(path):
    try:
        return open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_dataset(cfg: DatasetConfig) -> tuple[LabeledDataset, LabeledDataset]:
    if cfg.kind == "blobs":
        train_ds, test_ds, _ = synthetic_split(
            cfg.n_train, cfg.n_test, cfg.d,
            separation=cfg.separation, class_ratio=cfg.class_ratio,
            noise=cfg.noise, seed=cfg.seed,
        )
        return train_ds, test_ds
    if cfg.kind == "cache":
        try:
            return load_cache(cfg.train_path), load_cache(cfg.test_path)
        except OSError as exc:
            raise ConfigError(f"cannot read dataset cache: {exc}") from exc
    with _open_text(cfg.train_path) as fh:
        train_ds = parse_libsvm(fh)
    with _open_text(cfg.test_path) as fh:
        test_ds = parse_libsvm(fh, expected_dim=train_ds.d)
    if cfg.classes is not None:
        train_ds = filter_binary(train_ds, tuple(cfg.classes))
        test_ds = filter_binary(test_ds, tuple(cfg.classes))
    if cfg.normalize:
        train_ds, scale = max_l2_normalize(train_ds)
        test_ds = apply_scale(test_ds, scale)
    return train_ds, test_ds


class TrainSettings(BaseModel):
    """Method choice plus training knobs; None picks the dataset's defaults."""

    method: Literal["fisher", "influence", "deltagrad"] = "fisher"
    lam: float = Field(default=LAM, gt=0.0)
    epochs: int | None = Field(default=None, ge=1)
    batch_size: int | None = Field(default=None, ge=1)
    burn_in: int | None = Field(default=None, ge=0)
    history: int = Field(default=2, ge=1)
    sgd_seed: int = Field(default=0, ge=0)
    sigma: float = Field(default=0.0, ge=0.0)
    tau: int | None = Field(default=None, ge=1)
    noise_seed: int = Field(default=0, ge=0)

    def resolve_sgd(self, dataset_name: str, n: int) -> SgdConfig:
        d = defaults_for(dataset_name)
        epochs = self.epochs if self.epochs is not None else d.epochs
        batch = self.batch_size if self.batch_size is not None else d.resolve_batch_size(n)
        return fit_batch_size(
            SgdConfig(epochs=epochs, batch_size=batch, seed=self.sgd_seed), n
        )

    def resolve_burn_in(self, dataset_name: str) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return defaults_for(dataset_name).burn_in

    def method_params(self, dataset_name: str, noise_seed: int | None = None) -> MethodParams:
        return MethodParams(
            sigma=self.sigma,
            tau=self.tau,
            noise_seed=self.noise_seed if noise_seed is None else noise_seed,
            burn_in=self.resolve_burn_in(dataset_name),
            history=self.history,
        )


def _unique_seeds(seeds):
    if len(seeds) != len(set(seeds)):
        raise ValueError("seeds must be unique")
    if not seeds:
        raise ValueError("at least one seed is required")
    return seeds


class DeletionStudyConfig(BaseModel):
    """Grid for the pure-retraining deletion-distribution study."""

    dataset: DatasetConfig = DatasetConfig()
    lam: float = Field(default=LAM, gt=0.0)
    epochs: int | None = Field(default=None, ge=1)
    batch_size: int | None = Field(default=None, ge=1)
    sgd_seed: int = Field(default=0, ge=0)
    distributions: tuple[str, ...] = DISTRIBUTIONS
    fractions: tuple[float, ...] = STUDY_FRACTIONS
    seeds: tuple[int, ...] = (0, 1)
    target_class: int | None = Field(default=None, ge=0)

    @field_validator("distributions")
    @classmethod
    def _known_distributions(cls, v):
        for dist in v:
            if dist not in DISTRIBUTIONS:
                raise ValueError(f"unknown distribution {dist!r}")
        if not v:
            raise ValueError("at least one distribution is required")
        return v

    @field_validator("fractions")
    @classmethod
    def _valid_fractions(cls, v):
        if not v:
            raise ValueError("at least one fraction is required")
        for f in v:
            if not 0.0 < f <= 1.0:
                raise ValueError(f"fraction {f} outside (0, 1]")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        return tuple(_unique_seeds(list(v)))


def plain_retrain(view, lam: float, sgd_cfg: SgdConfig) -> np.ndarray:
    """Noise-free SGD weights for the remaining rows, one row per classifier."""
    obj = ObjectiveConfig(lam=lam)
    rows = []
    for task in classifier_tasks(view.base):
        X, ys = binary_task(view, task)
        w, _ = train(X, ys, obj, fit_batch_size(sgd_cfg, len(X)))
        rows.append(w)
    return np.stack(rows)


def run_deletion_study(cfg: DeletionStudyConfig) -> list[dict]:
    """Retrain-from-scratch accuracy for every distribution/fraction/seed cell."""
    train_ds, test_ds = load_dataset(cfg.dataset)
    view0 = full_view(train_ds)
    settings = TrainSettings(
        lam=cfg.lam, epochs=cfg.epochs, batch_size=cfg.batch_size, sgd_seed=cfg.sgd_seed
    )
    sgd_cfg = settings.resolve_sgd(cfg.dataset.name, train_ds.n)
    rows = []
    for dist in cfg.distributions:
        for fraction in cfg.fractions:
            for seed in cfg.seeds:
                spec = DeletionSpec(
                    distribution=dist, fraction=fraction, seed=seed,
                    target_class=cfg.target_class,
                )
                ids = sample_deletions(view0, spec)
                after = delete_points(view0, ids)
                with Stopwatch() as sw:
                    weights = plain_retrain(after, cfg.lam, sgd_cfg)
                tc, tt = model_accuracy_counts(weights, test_ds.features, test_ds.labels)
                del_X, del_y = take(train_ds, ids)
                dc, dt = model_accuracy_counts(weights, del_X, del_y)
                rows.append(
                    {
                        "dataset": cfg.dataset.name,
                        "del_dist": dist,
                        "del_fraction": fraction,
                        "m": len(ids),
                        "seed": seed,
                        "acc_test": tc / tt,
                        "acc_del": dc / dt,
                        "t_retrain_ms": sw.seconds * 1000.0,
                    }
                )
    rows.sort(key=lambda r: (r["dataset"], r["del_dist"], r["del_fraction"], r["seed"]))
    return rows


def study_csv_text(rows: list[dict]) -> str:
    lines = [",".join(STUDY_COLUMNS)]
    for r in rows:
        cells = []
        for col in STUDY_COLUMNS:
            v = r[col]
            if col == "t_retrain_ms":
                cells.append(f"{v:.3f}")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


class TradeoffConfig(BaseModel):
    """Sweep grid for certifiability/effectiveness/efficiency trade-offs.

    The axis picks which default grids vary when a grid is not given
    explicitly; explicitly given grids always win.
    """

    dataset: DatasetConfig = DatasetConfig()
    train: TrainSettings = TrainSettings()
    axis: Literal["cert-eff", "effec-eff", "effec-cert"] = "cert-eff"
    sigmas: tuple[float, ...] | None = None
    taus: tuple[int, ...] | None = None
    fractions: tuple[float, ...] | None = None
    distribution: str = "uniform-random"
    target_class: int | None = Field(default=None, ge=0)
    seeds: tuple[int, ...] = (0,)
    repeats: int = Field(default=1, ge=1)
    time_noise_in_retrain: bool = True

    @field_validator("distribution")
    @classmethod
    def _known_distribution(cls, v):
        if v not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {v!r}")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        return tuple(_unique_seeds(list(v)))

    @model_validator(mode="after")
    def _grids_non_empty(self):
        for name in ("sigmas", "taus", "fractions"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ValueError(f"{name} must be non-empty when given")
        if self.sigmas is not None and any(s < 0 for s in self.sigmas):
            raise ValueError("sigmas must be >= 0")
        if self.taus is not None and any(t < 1 for t in self.taus):
            raise ValueError("taus must be >= 1")
        if self.fractions is not None and any(not 0 < f <= 1 for f in self.fractions):
            raise ValueError("fractions must be in (0, 1]")
        return self

    def resolve_grids(self) -> tuple[tuple[float, ...], tuple[int, ...], tuple[float, ...]]:
        method = self.train.method
        if self.axis == "cert-eff":
            sigmas, taus, fractions = SIGMA_GRID, TAU_GRIDS[method], (0.01,)
        elif self.axis == "effec-eff":
            sigmas, taus, fractions = (0.0,), TAU_GRIDS[method], STUDY_FRACTIONS
        else:
            sigmas = SIGMA_GRID
            taus = (HIGHEST_EFFICIENCY_TAU[method],)
            fractions = STUDY_FRACTIONS
        return (
            self.sigmas if self.sigmas is not None else sigmas,
            self.taus if self.taus is not None else taus,
            self.fractions if self.fractions is not None else fractions,
        )


def _median_seconds(fn, repeats: int):
    """Run fn repeats times; returns (last result, median seconds)."""
    times = []
    result = None
    for _ in range(repeats):
        with Stopwatch() as sw:
            result = fn()
        times.append(sw.seconds)
    return result, statistics.median(times)


def run_tradeoff(cfg: TradeoffConfig) -> list[EvalReport]:
    """One EvalReport per (sigma, tau, fraction, seed) grid cell.

    The trained model is shared across tau and fraction cells of one
    (sigma, seed); the sigma-matched retrain baseline is shared across
    tau cells of one (sigma, fraction, seed).
    """
    train_ds, test_ds = load_dataset(cfg.dataset)
    view0 = full_view(train_ds)
    name = cfg.dataset.name
    method = cfg.train.method
    lam = cfg.train.lam
    sgd_cfg = cfg.train.resolve_sgd(name, train_ds.n)
    sigmas, taus, fractions = cfg.resolve_grids()
    burn_in = cfg.train.resolve_burn_in(name)
    reports = []
    for seed in cfg.seeds:
        models: dict[int, object] = {}
        for i_sigma, sigma in enumerate(sigmas):
            train_params = MethodParams(
                sigma=sigma, tau=cfg.train.tau,
                noise_seed=derive_seed(cfg.train.noise_seed, _TAG_MODEL_NOISE, seed, i_sigma),
                burn_in=burn_in, history=cfg.train.history,
            )
            model = train_method(method, view0, lam, sgd_cfg, train_params)
            models[i_sigma] = (model, train_params)
        for i_fraction, fraction in enumerate(fractions):
            spec = DeletionSpec(
                distribution=cfg.distribution, fraction=fraction, seed=seed,
                target_class=cfg.target_class,
            )
            ids = sample_deletions(view0, spec)
            after = delete_points(view0, ids)
            del_X, del_y = take(train_ds, ids)

            opt_params = MethodParams(
                sigma=0.0, tau=cfg.train.tau,
                noise_seed=0, burn_in=burn_in, history=cfg.train.history,
            )
            opt_model, t_opt = _median_seconds(
                lambda: retrain_baseline(method, after, lam, sgd_cfg, opt_params),
                cfg.repeats,
            )
            opt_test = model_accuracy_counts(
                opt_model.weights, test_ds.features, test_ds.labels
            )
            for i_sigma, sigma in enumerate(sigmas):
                model, train_params = models[i_sigma]
                if sigma == 0.0:
                    retrain_model, t_retrain = opt_model, t_opt
                else:
                    retrain_params = MethodParams(
                        sigma=sigma, tau=cfg.train.tau,
                        noise_seed=derive_seed(
                            cfg.train.noise_seed, _TAG_RETRAIN_NOISE, seed, i_sigma, i_fraction
                        ),
                        burn_in=train_params.burn_in, history=cfg.train.history,
                    )
                    retrain_model, t_retrain = _median_seconds(
                        lambda: retrain_baseline(method, after, lam, sgd_cfg, retrain_params),
                        cfg.repeats,
                    )
                    if not cfg.time_noise_in_retrain:
                        t_retrain = t_opt
                retrain_del = model_accuracy_counts(retrain_model.weights, del_X, del_y)
                for tau in taus:
                    cell_params = MethodParams(
                        sigma=sigma, tau=tau, noise_seed=train_params.noise_seed,
                        burn_in=train_params.burn_in, history=cfg.train.history,
                    )
                    (updated, _, _), t_unlearn = _median_seconds(
                        lambda: unlearn_method(method, model, view0, ids, lam, cell_params),
                        cfg.repeats,
                    )
                    upd_test = model_accuracy_counts(
                        updated.weights, test_ds.features, test_ds.labels
                    )
                    upd_del = model_accuracy_counts(updated.weights, del_X, del_y)
                    reports.append(
                        EvalReport(
                            dataset=name,
                            method=method,
                            sigma=float(sigma),
                            tau=float(tau),
                            del_dist=cfg.distribution,
                            del_fraction=float(fraction),
                            m=len(ids),
                            seed=seed,
                            acc_test_updated=upd_test[0] / upd_test[1],
                            acc_test_retrain_opt=opt_test[0] / opt_test[1],
                            acc_del_updated=upd_del[0] / upd_del[1],
                            acc_del_retrain=retrain_del[0] / retrain_del[1],
                            acc_err_pct=acc_err(opt_test, upd_test),
                            acc_dis_pct=acc_dis(retrain_del, upd_del),
                            t_unlearn_ms=t_unlearn * 1000.0,
                            t_retrain_ms=t_retrain * 1000.0,
                            speedup=speedup(t_retrain, t_unlearn),
                        )
                    )
    reports.sort(key=provenance_key)
    return reports


def tradeoff_csv_text(reports: list[EvalReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(r.to_row()) for r in reports)
    return "\n".join(lines) + "\n"


class StreamEvent(BaseModel):
    """One deletion request: either explicit row ids or a sampled batch.

    Explicit ids are interpreted against the pipeline's current row
    universe, which is rebased whenever a retrain happens.  A sampled
    batch without its own seed gets one derived from the stream seed and
    its position.
    """

    ids: tuple[int, ...] | None = None
    fraction: float | None = Field(default=None, gt=0.0, le=1.0)
    distribution: str = "uniform-random"
    target_class: int | None = Field(default=None, ge=0)
    seed: int | None = Field(default=None, ge=0)

    @field_validator("distribution")
    @classmethod
    def _known_distribution(cls, v):
        if v not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {v!r}")
        return v

    @model_validator(mode="after")
    def _one_source(self):
        if (self.ids is None) == (self.fraction is None):
            raise ValueError("give exactly one of ids or fraction")
        return self


class PipelineJobConfig(BaseModel):
    """A full lifecycle replay: calibrate, train, stream deletions, audit."""

    dataset: DatasetConfig = DatasetConfig()
    train: TrainSettings = TrainSettings()
    theta: float = Field(default=0.5, gt=0.0, lt=1.0)
    calibration_seed: int = Field(default=0, ge=0)
    safety: float = Field(default=1.0, gt=0.0)
    c: float | None = Field(default=None, ge=0.0)
    min_acc_test: float = Field(default=0.0, ge=0.0, le=1.0)
    max_est_disparity: float = Field(default=100.0, ge=0.0)
    recalibrate: bool = False
    stream: tuple[StreamEvent, ...] = ()
    stream_seed: int = Field(default=0, ge=0)
    audit_threshold: float | None = Field(default=None, ge=0.0)


def resolve_stream_ids(view, ev: StreamEvent, default_seed: int) -> np.ndarray:
    """Row ids for one stream event against the current row universe."""
    if ev.ids is not None:
        return np.asarray(ev.ids, dtype=np.int64)
    spec = DeletionSpec(
        distribution=ev.distribution, fraction=ev.fraction,
        seed=ev.seed if ev.seed is not None else default_seed,
        target_class=ev.target_class,
    )
    return sample_deletions(view, spec)


def build_pipeline_job(cfg: PipelineJobConfig) -> tuple[Pipeline, dict | None]:
    """Construct the pipeline, replay the stream, optionally audit.

    Returns the live pipeline (for further interactive requests) and the
    audit result when one was asked for.
    """
    train_ds, test_ds = load_dataset(cfg.dataset)
    view0 = full_view(train_ds)
    name = cfg.dataset.name
    sgd_cfg = cfg.train.resolve_sgd(name, train_ds.n)
    params = cfg.train.method_params(name)
    if cfg.c is not None:
        estimator = RetrainEstimator(c=cfg.c, theta=cfg.theta, safety=cfg.safety)
    else:
        calibrated = calibrate_c(
            view0, test_ds, cfg.train.method, cfg.train.lam, sgd_cfg, params,
            theta=cfg.theta, seed=cfg.calibration_seed,
        )
        estimator = RetrainEstimator(c=calibrated.c, theta=cfg.theta, safety=cfg.safety)
    pipe = Pipeline(
        method=cfg.train.method,
        view=view0,
        test_ds=test_ds,
        lam=cfg.train.lam,
        sgd_cfg=sgd_cfg,
        params=params,
        thresholds=Thresholds(
            min_acc_test=cfg.min_acc_test, max_est_disparity=cfg.max_est_disparity
        ),
        estimator=estimator,
        recalibrate=cfg.recalibrate,
    )
    for i, ev in enumerate(cfg.stream):
        ids = resolve_stream_ids(pipe.view, ev, derive_seed(cfg.stream_seed, _TAG_STREAM, i))
        pipe.step_deletion(ids)
    audit_result = None
    if cfg.audit_threshold is not None:
        audit_result = pipe.audit(cfg.audit_threshold)
    return pipe, audit_result


def run_pipeline_job(cfg: PipelineJobConfig) -> dict:
    """Replay the configured deletion stream; returns events and audit result."""
    pipe, audit_result = build_pipeline_job(cfg)
    return {"events": pipe.events, "audit": audit_result, "estimator_c": pipe.estimator.c}


def events_jsonl_text(events: list[dict]) -> str:
    return "\n".join(json.dumps(e, sort_keys=True) for e in events) + "\n"


class IngestConfig(BaseModel):
    """Convert libsvm text into normalized binary caches."""

    train_path: str
    test_path: str | None = None
    classes: tuple[float, float] | None = None
    normalize: bool = True
    out: str
    out_test: str | None = None

    @model_validator(mode="after")
    def _test_out(self):
        if self.test_path is not None and self.out_test is None:
            raise ValueError("out_test is required when test_path is given")
        return self


def run_ingest(cfg: IngestConfig) -> dict:
    with _open_text(cfg.train_path) as fh:
        train_ds = parse_libsvm(fh)
    if cfg.classes is not None:
        train_ds = filter_binary(train_ds, tuple(cfg.classes))
    scale = None
    if cfg.normalize:
        train_ds, scale = max_l2_normalize(train_ds)
    save_cache(train_ds, cfg.out, scale)
    summary = {
        "train": {"path": cfg.out, "n": train_ds.n, "d": train_ds.d, "k": train_ds.k},
        "scale": scale,
    }
    if cfg.test_path is not None:
        with _open_text(cfg.test_path) as fh:
            test_ds = parse_libsvm(fh, expected_dim=train_ds.d)
        if cfg.classes is not None:
            test_ds = filter_binary(test_ds, tuple(cfg.classes))
        if scale is not None:
            test_ds = apply_scale(test_ds, scale)
        save_cache(test_ds, cfg.out_test, scale)
        summary["test"] = {
            "path": cfg.out_test, "n": test_ds.n, "d": test_ds.d, "k": test_ds.k
        }
    return summary


class TrainJobConfig(BaseModel):
    """Train one model and save its weights (and replay trajectories)."""

    dataset: DatasetConfig = DatasetConfig()
    train: TrainSettings = TrainSettings()
    out: str


def run_train_job(cfg: TrainJobConfig) -> dict:
    train_ds, test_ds = load_dataset(cfg.dataset)
    view0 = full_view(train_ds)
    name = cfg.dataset.name
    sgd_cfg = cfg.train.resolve_sgd(name, train_ds.n)
    params = cfg.train.method_params(name)
    model = train_method(cfg.train.method, view0, cfg.train.lam, sgd_cfg, params)
    out = str(cfg.out)
    if not out.endswith(".npz"):
        out += ".npz"
    np.savez(out, weights=model.weights)
    trajectory_paths = []
    if model.trajectories is not None:
        for c, traj in enumerate(model.trajectories):
            tp = out + f".traj{c}"
            save_trajectory(traj, tp)
            trajectory_paths.append(tp)
    tc, tt = model_accuracy_counts(model.weights, test_ds.features, test_ds.labels)
    meta = {
        "weights": out,
        "method": cfg.train.method,
        "dataset": name,
        "sigma": cfg.train.sigma,
        "lam": cfg.train.lam,
        "epochs": sgd_cfg.epochs,
        "batch_size": sgd_cfg.batch_size,
        "sgd_seed": sgd_cfg.seed,
        "classifiers": model.classifiers,
        "d": model.d,
        "acc_test": tc / tt,
        "train_seconds": model.seconds,
        "trajectories": trajectory_paths,
    }
    meta_path = out + ".meta.json"
    Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta
