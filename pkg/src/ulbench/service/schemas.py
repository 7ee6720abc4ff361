"""Request and response bodies for the HTTP service.

Experiment configs are reused directly from the experiments module; the
models here cover service-only concerns: health, dataset stats, live
pipeline interaction, and error envelopes.
"""
from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class DatasetStats(BaseModel):
    name: str
    n_train: int
    n_test: int
    d: int
    k: int


class SplitStats(BaseModel):
    path: str
    n: int
    d: int
    k: int


class IngestResponse(BaseModel):
    train: SplitStats
    test: SplitStats | None = None
    scale: float | None = None


class TrainResponse(BaseModel):
    weights: str
    method: str
    dataset: str
    sigma: float
    lam: float
    epochs: int
    batch_size: int
    sgd_seed: int
    classifiers: int
    d: int
    acc_test: float
    train_seconds: float
    trajectories: list[str]


class StudyResponse(BaseModel):
    columns: list[str]
    rows: list[dict]
    csv: str


class TradeoffResponse(BaseModel):
    columns: list[str]
    rows: list[dict]
    csv: str


class PipelineCreateResponse(BaseModel):
    id: str
    estimator_c: float
    events: list[dict]
    audit: dict | None = None


class PredictRequest(BaseModel):
    rows: list[list[float]] = Field(min_length=1)


class PredictResponse(BaseModel):
    predictions: list[int]


class DeleteResponse(BaseModel):
    decision: str
    m_cumulative: int
    acc_test: float
    events: list[dict]


class AuditRequest(BaseModel):
    threshold: float = Field(ge=0.0)


class AuditResponse(BaseModel):
    passed: bool
    measured_acc_dis: float


class EventsResponse(BaseModel):
    events: list[dict]


class ErrorBody(BaseModel):
    kind: str
    detail: str
