"""Domain models package."""

from conformal_reeb.models.fields import Endomorphism, KForm, Metric, ScalarField, Signature, VectorField
from conformal_reeb.models.frame_algebra import FrameAlgebra, abelian, validate_frame_algebra
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.models.manifold_spec import ManifoldSpec

__all__ = [
    "Endomorphism",
    "KForm",
    "Metric",
    "ScalarField",
    "Signature",
    "VectorField",
    "FrameAlgebra",
    "abelian",
    "validate_frame_algebra",
    "GridChart",
    "ManifoldSpec",
]
