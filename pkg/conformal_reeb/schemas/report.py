"""
Pydantic schema for run reports.

Reports carry no timings or run ids, so identical inputs give identical documents.
"""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class Stats(BaseModel):
    """min / mean / max of a scalar field."""

    min: float
    mean: float
    max: float


class CheckRecord(BaseModel):
    stage: str
    name: str
    residual: float
    tolerance: float
    passed: bool


class StageRecordModel(BaseModel):
    name: str
    status: str


class FailureRecord(BaseModel):
    """First failure of a run, tagged with its stage."""

    stage: str
    code: str
    message: str
    residual: float | None = None
    exit_code: int


class ScalingRecord(BaseModel):
    k: float
    metric_scale: float
    orientation_sign: int
    contact_factor: float | None = None


class DetectionRecord(BaseModel):
    initial_point: list[float]
    period: float
    recurrence_distance: float


class OrbitScanRecord(BaseModel):
    verdict: str
    distinct_orbits: int
    realization: str
    horizon: float
    threshold: float
    step: float
    detections: list[DetectionRecord] = Field(default_factory=list)


class BettiRecord(BaseModel):
    b1: int
    case: str
    passed: bool


class ProductRecord(BaseModel):
    a: float
    b: float
    residuals: dict[str, float]
    printed_metric_compatibility: float
    note: str


class ToolRecord(BaseModel):
    name: str
    version: str
    libraries: dict[str, str]


class RunReport(BaseModel):
    """
    Structured report of one classification run.

    gates holds the booleans the exit status depends on: the run succeeds
    exactly when case is present and every gate is true.
    """

    tool: ToolRecord
    spec: str
    backend: str | None = None
    grid_n: int | None = None
    tolerance: float
    status: str
    exit_code: int
    case: str | None = None
    k: float | None = None
    sigma: Stats | None = None
    tau: Stats | None = None
    alpha_max_norm: float | None = None
    normality_residual: float | None = None
    scaling: ScalingRecord | None = None
    checks: list[CheckRecord] = Field(default_factory=list)
    stages: list[StageRecordModel] = Field(default_factory=list)
    failure: FailureRecord | None = None
    orbit_scan: OrbitScanRecord | None = None
    betti: BettiRecord | None = None
    product_kahler: ProductRecord | None = None
    gates: dict[str, bool] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="forbid")
