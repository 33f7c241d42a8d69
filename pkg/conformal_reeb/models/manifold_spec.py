"""
Validated problem instance: a backend, a Lorentzian metric and a candidate field.
"""

from dataclasses import dataclass, field
from typing import Literal

from conformal_reeb.models.fields import Metric, VectorField
from conformal_reeb.models.frame_algebra import FrameAlgebra
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.schemas.spec_file import FixtureMetadata


@dataclass(frozen=True, eq=False)
class ManifoldSpec:
    """
    Full problem instance.

    Properties:
        name: Fixture or file name
        backend: "frame" or "grid"
        space: The FrameAlgebra or GridChart every field lives on
        metric: Lorentzian metric components
        candidate_field: The field R to classify
        orientation: Sign of the volume form
        metadata: b1, frame volume and expectations from the spec file
        min_field_norm: min |R| in the reference metric
    """

    name: str
    backend: Literal["frame", "grid"]
    space: FrameAlgebra | GridChart
    metric: Metric
    candidate_field: VectorField
    orientation: int = 1
    metadata: FixtureMetadata = field(default_factory=FixtureMetadata)
    min_field_norm: float = 0.0

    def __post_init__(self):
        if self.space.kind != self.backend:
            raise ValueError(f"Backend {self.backend} does not match a {self.space.kind} space")
        if self.metric.space != self.space or self.candidate_field.space != self.space:
            raise ValueError("Metric and candidate field must live on the spec's space")

    @property
    def frame(self) -> FrameAlgebra | None:
        return self.space if self.backend == "frame" else None

    @property
    def chart(self) -> GridChart | None:
        return self.space if self.backend == "grid" else None
