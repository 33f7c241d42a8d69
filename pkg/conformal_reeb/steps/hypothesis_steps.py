"""
Stages that check the input and the timelike-conformal hypothesis.
"""

from conformal_reeb.core.exceptions import NotTimelike
from conformal_reeb.core.stage_contract import Check, PipelineContext, StageOutput
from conformal_reeb.services.lorentz_conformal import (
    causal_character,
    conformal_factor,
    killing_residual,
    normalize_conformal,
    unit_residual,
)
from conformal_reeb.services.spec_loader import validate_spec
from conformal_reeb.steps.base import BaseStage


class ValidateStage(BaseStage):
    """Build the ManifoldSpec from the raw document."""

    name = "validate"

    def run(self, state, context: PipelineContext) -> StageOutput:
        config = context.config
        spec = validate_spec(
            state.raw,
            tolerance=context.tolerance,
            n=config.grid_n,
            backend=config.backend,
            source=config.spec_path.name,
        )
        return StageOutput(
            updates={"spec": spec},
            checks=[Check.of("metric_symmetry", spec.metric.symmetry_residual(), context.tolerance)],
        )


class CausalCharacterStage(BaseStage):
    """g(R,R) < 0 at every sample."""

    name = "causal_character"

    def run(self, state, context: PipelineContext) -> StageOutput:
        report = causal_character(state.spec.candidate_field, state.spec.metric)
        if not report.is_timelike:
            raise NotTimelike(report.character.value, report.max_norm)
        return StageOutput(updates={"causal": report})


class ConformalFactorStage(BaseStage):
    name = "conformal_factor"

    def run(self, state, context: PipelineContext) -> StageOutput:
        report = conformal_factor(state.spec.candidate_field, state.spec.metric, context.tolerance)
        return StageOutput(
            updates={"conformal": report},
            checks=[Check.of("conformal_residual", report.residual, report.threshold)],
        )


class NormalizeConformalStage(BaseStage):
    """g~ = -g / g(R,R)."""

    name = "normalize_conformal"

    def run(self, state, context: PipelineContext) -> StageOutput:
        R = state.spec.candidate_field
        g_tilde = normalize_conformal(state.spec.metric, R, context.tolerance)
        residuals = {"unit_timelike": unit_residual(g_tilde, R, -1.0), "killing": killing_residual(g_tilde, R)}
        return StageOutput(updates={"g_tilde": g_tilde}, checks=self.checks(residuals, context.tolerance))
