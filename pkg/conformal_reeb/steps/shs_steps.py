"""
Stages building the Riemannian metric, the SHS and the basic class.
"""

import numpy as np

from conformal_reeb.core.exceptions import PreconditionViolated
from conformal_reeb.core.stage_contract import Check, PipelineContext, StageOutput
from conformal_reeb.models.fields import max_norm
from conformal_reeb.services.basic_cohomology import decompose_basic_class, verify_nonexact_volume
from conformal_reeb.services.exterior_calculus import exterior_derivative
from conformal_reeb.services.shs_pipeline import build_theta_omega, geodesic_unit_check, reeb_field, riemannianize
from conformal_reeb.steps.base import BaseStage


class RiemannianizeStage(BaseStage):
    name = "riemannianize"

    def run(self, state, context: PipelineContext) -> StageOutput:
        g_hat = riemannianize(state.g_tilde, state.spec.candidate_field, context.tolerance)
        return StageOutput(
            updates={"g_hat": g_hat},
            checks=[Check.of("metric_symmetry", g_hat.symmetry_residual(), context.tolerance)],
        )


class GeodesicUnitCheckStage(BaseStage):
    """R is a unit Killing geodesic field of g^."""

    name = "geodesic_unit_check"

    def run(self, state, context: PipelineContext) -> StageOutput:
        report = geodesic_unit_check(state.g_hat, state.spec.candidate_field, context.tolerance)
        if not report.passed:
            raise PreconditionViolated("unit_killing_geodesic", max(report.acceleration, report.killing, report.unit))
        residuals = {"acceleration": report.acceleration, "killing": report.killing, "unit": report.unit}
        return StageOutput(updates={"geodesic": report}, checks=self.checks(residuals, context.tolerance))


class BuildThetaOmegaStage(BaseStage):
    """(theta, Omega) and the Reeb field solved back from them."""

    name = "build_theta_omega"

    def run(self, state, context: PipelineContext) -> StageOutput:
        R = state.spec.candidate_field
        shs = build_theta_omega(state.g_hat, R, state.spec.orientation, context.tolerance)
        solved = reeb_field(shs.theta, shs.omega, state.g_hat, context.tolerance)
        residuals = dict(shs.residuals)
        residuals["reeb_field"] = max_norm(solved.components - R.components)
        return StageOutput(updates={"shs": shs, "reeb_solution": solved}, checks=self.checks(residuals, context.tolerance))


class NonexactVolumeStage(BaseStage):
    """The integral of theta ^ Omega is positive, so [Omega]_B != 0."""

    name = "verify_nonexact_volume"

    def run(self, state, context: PipelineContext) -> StageOutput:
        result = verify_nonexact_volume(state.shs.theta, state.shs.omega, state.spec.orientation)
        if not result.passed:
            raise PreconditionViolated("nonexact_volume", abs(result.integral))
        return StageOutput(updates={"nonexact": result})


class DecomposeBasicClassStage(BaseStage):
    name = "decompose_basic_class"

    def run(self, state, context: PipelineContext) -> StageOutput:
        shs = state.shs
        decomposition = decompose_basic_class(
            exterior_derivative(shs.theta), shs.omega, shs.reeb, shs.theta, context.tolerance
        )
        residuals = {"decomposition": decomposition.residual}
        if not np.isfinite(decomposition.k):
            raise PreconditionViolated("finite_k", float("inf"))
        return StageOutput(updates={"decomposition": decomposition}, checks=self.checks(residuals, context.tolerance))
