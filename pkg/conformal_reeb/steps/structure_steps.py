"""
Stages for the case split and the resulting structures.
"""

from dataclasses import replace

from conformal_reeb.core.exceptions import CompatibilityFailure
from conformal_reeb.core.stage_contract import Check, PipelineContext, StageOutput
from conformal_reeb.services.structure_classifier import (
    Case,
    build_almost_contact,
    chi_isomorphism,
    classify,
    nijenhuis_normality,
    product_kahler,
)
from conformal_reeb.steps.base import BaseStage


class ClassifyStage(BaseStage):
    name = "classify"

    def run(self, state, context: PipelineContext) -> StageOutput:
        report = classify(state.shs, state.decomposition, state.g_hat, context.tolerance)
        return StageOutput(updates={"classification": report}, checks=self.checks(report.residuals, context.tolerance))


class BuildAlmostContactStage(BaseStage):
    name = "build_almost_contact"

    def run(self, state, context: PipelineContext) -> StageOutput:
        report = state.classification
        structure = build_almost_contact(
            report.eta,
            state.shs.reeb,
            state.g_hat,
            state.shs.omega,
            state.shs.theta,
            report.case,
            report.k,
            context.tolerance,
        )
        return StageOutput(
            updates={"structure": structure, "classification": replace(report, structure=structure)},
            checks=self.checks(structure.residuals, context.tolerance),
        )


class NijenhuisNormalityStage(BaseStage):
    """N_phi + 2 d eta (x) xi = 0."""

    name = "nijenhuis_normality"

    def run(self, state, context: PipelineContext) -> StageOutput:
        residual = nijenhuis_normality(state.structure)
        if residual > context.tolerance:
            raise CompatibilityFailure("normality", residual)
        return StageOutput(
            updates={"nijenhuis_residual": residual, "classification": replace(state.classification, nijenhuis_residual=residual)},
            checks=[Check.of("normality", residual, context.tolerance)],
        )


class ChiIsomorphismStage(BaseStage):
    """v -> i_v Omega + eta(v) eta is invertible and round-trips eta."""

    name = "chi_isomorphism"

    def run(self, state, context: PipelineContext) -> StageOutput:
        result = chi_isomorphism(state.classification.eta, state.shs.omega)
        return StageOutput(updates={"chi": result}, checks=[Check.of("chi_round_trip", result.round_trip, context.tolerance)])


class ProductKahlerStage(BaseStage):
    """Kahler structure on M x M; co-Kahler runs only."""

    name = "product_kahler"

    def run(self, state, context: PipelineContext) -> StageOutput:
        if state.classification.case is not Case.CO_KAHLER:
            return StageOutput()
        config = context.config
        result = product_kahler(state.structure, config.product_a, config.product_b, context.tolerance)
        for identity, residual in result.residuals.items():
            if residual > context.tolerance:
                raise CompatibilityFailure(f"product_{identity}", residual)
        checks = [Check.of(f"product_{name}", residual, context.tolerance) for name, residual in result.residuals.items()]
        return StageOutput(updates={"product": result}, checks=checks)
