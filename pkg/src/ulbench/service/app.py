"""HTTP service exposing the benchmark harness.

Experiment endpoints are stateless: each request carries its full config
and returns the finished rows.  Pipelines are the one stateful resource;
a created pipeline stays in memory under an id for interactive predict,
delete, and audit calls.

Error envelope: config problems return 400 with kind "config", numerical
failures 500 with kind "numerical"; the CLI maps these onto its exit
codes.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, NumericalError
from ..experiments import (
    DatasetConfig,
    DeletionStudyConfig,
    IngestConfig,
    PipelineJobConfig,
    STUDY_COLUMNS,
    StreamEvent,
    TradeoffConfig,
    TrainJobConfig,
    build_pipeline_job,
    load_dataset,
    resolve_stream_ids,
    run_deletion_study,
    run_ingest,
    run_tradeoff,
    run_train_job,
    study_csv_text,
    tradeoff_csv_text,
)
from ..metrics import CSV_COLUMNS
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="ulbench", version=__version__)
    app.state.pipelines = {}
    app.state.ids = itertools.count(1)

    @app.exception_handler(ConfigError)
    def config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"kind": "config", "detail": str(exc)})

    @app.exception_handler(NumericalError)
    def numerical_error(request: Request, exc: NumericalError):
        return JSONResponse(status_code=500, content={"kind": "numerical", "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    def validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first.get("loc", ()))
        return JSONResponse(
            status_code=400,
            content={"kind": "config", "detail": f"{loc}: {first.get('msg', 'invalid')}"},
        )

    def get_pipeline(pipeline_id: str):
        pipe = app.state.pipelines.get(pipeline_id)
        if pipe is None:
            raise HTTPException(status_code=404, detail=f"no pipeline {pipeline_id!r}")
        return pipe

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/datasets/synthetic", response_model=schemas.DatasetStats)
    def synthetic_dataset(cfg: DatasetConfig):
        if cfg.kind != "blobs":
            raise ConfigError("this endpoint generates synthetic blobs; use kind 'blobs'")
        train_ds, test_ds = load_dataset(cfg)
        return schemas.DatasetStats(
            name=cfg.name, n_train=train_ds.n, n_test=test_ds.n,
            d=train_ds.d, k=train_ds.k,
        )

    @app.post("/datasets/ingest", response_model=schemas.IngestResponse)
    def ingest(cfg: IngestConfig):
        return schemas.IngestResponse(**run_ingest(cfg))

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_model(cfg: TrainJobConfig):
        return schemas.TrainResponse(**run_train_job(cfg))

    @app.post("/experiments/deletion-study", response_model=schemas.StudyResponse)
    def deletion_study(cfg: DeletionStudyConfig):
        rows = run_deletion_study(cfg)
        return schemas.StudyResponse(
            columns=list(STUDY_COLUMNS), rows=rows, csv=study_csv_text(rows)
        )

    @app.post("/experiments/tradeoff", response_model=schemas.TradeoffResponse)
    def tradeoff(cfg: TradeoffConfig):
        reports = run_tradeoff(cfg)
        return schemas.TradeoffResponse(
            columns=list(CSV_COLUMNS),
            rows=[asdict(r) for r in reports],
            csv=tradeoff_csv_text(reports),
        )

    @app.post("/pipelines", response_model=schemas.PipelineCreateResponse)
    def create_pipeline(cfg: PipelineJobConfig):
        pipe, audit_result = build_pipeline_job(cfg)
        pipeline_id = f"p{next(app.state.ids)}"
        app.state.pipelines[pipeline_id] = pipe
        return schemas.PipelineCreateResponse(
            id=pipeline_id,
            estimator_c=pipe.estimator.c,
            events=pipe.events,
            audit=audit_result,
        )

    @app.post("/pipelines/{pipeline_id}/predict", response_model=schemas.PredictResponse)
    def predict(pipeline_id: str, body: schemas.PredictRequest):
        pipe = get_pipeline(pipeline_id)
        X = np.asarray(body.rows, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != pipe.model.d:
            raise ConfigError(
                f"rows must be a matrix with {pipe.model.d} features per row"
            )
        return schemas.PredictResponse(predictions=pipe.predict(X).tolist())

    @app.post("/pipelines/{pipeline_id}/delete", response_model=schemas.DeleteResponse)
    def delete(pipeline_id: str, body: StreamEvent):
        pipe = get_pipeline(pipeline_id)
        default_seed = len(pipe.events)
        ids = resolve_stream_ids(pipe.view, body, default_seed)
        decision = pipe.step_deletion(ids)
        return schemas.DeleteResponse(
            decision=decision,
            m_cumulative=pipe.m_cumulative,
            acc_test=pipe.acc_test,
            events=pipe.events,
        )

    @app.post("/pipelines/{pipeline_id}/audit", response_model=schemas.AuditResponse)
    def audit(pipeline_id: str, body: schemas.AuditRequest):
        pipe = get_pipeline(pipeline_id)
        result = pipe.audit(body.threshold)
        return schemas.AuditResponse(
            passed=result["pass"], measured_acc_dis=result["measured_acc_dis"]
        )

    @app.get("/pipelines/{pipeline_id}/events", response_model=schemas.EventsResponse)
    def events(pipeline_id: str):
        pipe = get_pipeline(pipeline_id)
        return schemas.EventsResponse(events=pipe.events)

    return app
