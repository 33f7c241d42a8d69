"""
Pydantic schemas for manifold spec files.

A spec file is a TOML document with four tables:

    [manifold]          name, backend, orientation, structure constants or grid chart
    [metric]            signature and components keyed "ij" (1-based, upper triangle)
    [field]             candidate field components
    [fixture-metadata]  b1, frame volume, expected case and k, description

Component values are numbers or expressions in t, x, y.
"""

import re
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ComponentValue = float | str

_METRIC_KEY = re.compile(r"^[1-3][1-3]$")


class ManifoldSection(BaseModel):
    """The [manifold] table."""

    name: str
    backend: Literal["frame", "grid"]
    orientation: Literal[1, -1] = 1
    group: Literal["abelian", "heisenberg", "su2"] | None = None
    structure_constants: list[tuple[int, int, int, float]] = Field(default_factory=list)
    n: int | None = None
    periods: tuple[float, float, float] | None = None

    model_config = ConfigDict(extra="forbid")

    @field_validator("structure_constants")
    @classmethod
    def _indices_in_range(cls, entries: list[tuple[int, int, int, float]]) -> list[tuple[int, int, int, float]]:
        for i, j, k, _ in entries:
            if not all(1 <= index <= 3 for index in (i, j, k)):
                raise ValueError(f"structure constant indices must be in 1..3, got {(i, j, k)}")
        return entries

    @model_validator(mode="after")
    def _backend_fields(self) -> "ManifoldSection":
        if self.backend == "grid":
            if self.periods is None:
                raise ValueError("grid backend requires periods")
            if self.structure_constants:
                raise ValueError("grid backend is a flat torus chart; structure_constants not allowed")
        elif self.n is not None or self.periods is not None:
            raise ValueError("frame backend does not take n or periods")
        return self


class MetricSection(BaseModel):
    """The [metric] table."""

    signature: Literal["lorentzian", "riemannian"] = "lorentzian"
    components: dict[str, ComponentValue]

    model_config = ConfigDict(extra="forbid")

    @field_validator("components")
    @classmethod
    def _keys(cls, components: dict[str, ComponentValue]) -> dict[str, ComponentValue]:
        for key in components:
            if not _METRIC_KEY.match(key):
                raise ValueError(f"metric key must look like '12', got {key!r}")
        return components


class FieldSection(BaseModel):
    """The [field] table."""

    components: tuple[ComponentValue, ComponentValue, ComponentValue]

    model_config = ConfigDict(extra="forbid")


class FixtureMetadata(BaseModel):
    """The [fixture-metadata] table."""

    b1: int | None = Field(default=None, ge=0)
    frame_volume: float = Field(default=1.0, gt=0)
    expected_case: Literal["sasakian", "co-kahler"] | None = None
    expected_k: float | None = None
    description: str = ""

    model_config = ConfigDict(extra="forbid")


class RawSpec(BaseModel):
    """A parsed, not yet validated, spec file."""

    manifold: ManifoldSection
    metric: MetricSection
    field: FieldSection
    fixture_metadata: FixtureMetadata = Field(default_factory=FixtureMetadata, alias="fixture-metadata")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)
