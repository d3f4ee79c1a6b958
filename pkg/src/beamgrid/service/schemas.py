"""Pydantic request/response models for the experiment service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class FlopsRow(BaseModel):
    network: str
    input_shape: str
    flops: int


class FlopsResponse(BaseModel):
    rows: list[FlopsRow]


class DatasetRequest(BaseModel):
    """Build a dataset container and write it to ``out``.

    ``config`` holds key = value overrides applied on top of ``preset``.
    """

    out: str
    config: dict[str, str] = Field(default_factory=dict)
    preset: str = "desk"
    samples: int | None = None
    seed: int | None = None


class DatasetResponse(BaseModel):
    path: str
    n_samples: int
    classes: int
    los_fraction: float
    split_counts: dict[str, int]


class ReportRow(BaseModel):
    value: float
    split: str
    b: int
    atrr: float | None
    n: int


class ExperimentRequest(BaseModel):
    out_dir: str
    config: dict[str, str] = Field(default_factory=dict)
    preset: str = "desk"
    dataset: str | None = None


class HistoryModel(BaseModel):
    train_loss: list[float]
    val_accuracy: list[float]


class ExperimentResponse(BaseModel):
    rows: list[ReportRow]
    history: HistoryModel
    top1_accuracy: float
    n_excluded: int
    dataset_path: str
    checkpoint_path: str
    report_csv_path: str
    history_csv_path: str
    digest: str
    los_fraction: float


class EvaluateRequest(BaseModel):
    checkpoint: str
    dataset: str
    b_max: int = 5


class EvaluateResponse(BaseModel):
    rows: list[ReportRow]
    top1_accuracy: float
    n_excluded: int


class SigmaSweepRequest(BaseModel):
    checkpoint: str
    config: dict[str, str] = Field(default_factory=dict)
    preset: str = "desk"
    sigmas: list[float] | None = None
    b_max: int | None = None


class SigmaSweepResponse(BaseModel):
    rows: list[ReportRow]


class InspectRequest(BaseModel):
    path: str


class InspectResponse(BaseModel):
    format: str
    fields: dict[str, str]
