"""
Pydantic schema for a single classification run.
"""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from conformal_reeb.config import settings


class OrbitScanConfig(BaseModel):
    """Orbit scan parameters."""

    enabled: bool = False
    horizon_periods: float = Field(default_factory=lambda: settings.orbit_horizon_periods, gt=0)
    threshold: float = Field(default_factory=lambda: settings.orbit_threshold, gt=0)
    steps_per_period: int = Field(default_factory=lambda: settings.orbit_steps_per_period, ge=8)
    samples_per_axis: int = Field(default_factory=lambda: settings.orbit_samples_per_axis, ge=1, le=8)

    model_config = ConfigDict(frozen=True)


class RunConfig(BaseModel):
    """Schema for one pipeline invocation."""

    spec_path: Path
    backend: Literal["frame", "grid"] | None = None
    grid_n: int | None = None
    tolerance: float | None = Field(default=None, gt=0)
    stages: tuple[str, ...] | None = None
    report_format: Literal["text", "structured"] = "text"
    plots_dir: Path | None = None
    orbit_scan: OrbitScanConfig = Field(default_factory=OrbitScanConfig)
    product_a: float = 0.0
    product_b: float = 1.0

    model_config = ConfigDict(frozen=True)

    @field_validator("grid_n")
    @classmethod
    def _power_of_two(cls, value: int | None) -> int | None:
        if value is None:
            return value
        if value < 8 or value > 256 or value & (value - 1):
            raise ValueError(f"grid_n must be a power of two in [8, 256], got {value}")
        return value

    def echo(self) -> dict:
        """Config fields that are echoed into reports. Paths are reduced to names."""
        return {
            "spec": self.spec_path.name,
            "backend": self.backend,
            "grid_n": self.grid_n,
            "tolerance": self.tolerance,
            "stages": list(self.stages) if self.stages else None,
            "orbit_scan": self.orbit_scan.enabled,
            "orbit_horizon_periods": self.orbit_scan.horizon_periods,
            "orbit_threshold": self.orbit_scan.threshold,
            "product_a": self.product_a,
            "product_b": self.product_b,
        }
