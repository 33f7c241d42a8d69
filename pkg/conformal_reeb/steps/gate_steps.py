"""
Corollary gates: closed orbits of Sasakian Reeb fields and Betti parity.
"""

from conformal_reeb.core.stage_contract import PipelineContext, StageOutput
from conformal_reeb.services.dynamics import betti_consistency, closed_orbit_scan, orbit_consistency
from conformal_reeb.steps.base import BaseStage


class ClosedOrbitScanStage(BaseStage):
    """Runs only when the orbit scan is enabled in the RunConfig."""

    name = "closed_orbit_scan"

    def run(self, state, context: PipelineContext) -> StageOutput:
        options = context.config.orbit_scan
        if not options.enabled:
            return StageOutput()
        scan = closed_orbit_scan(
            state.shs.reeb,
            horizon_periods=options.horizon_periods,
            threshold=options.threshold,
            g_hat=state.g_hat,
            samples_per_axis=options.samples_per_axis,
            steps_per_period=options.steps_per_period,
        )
        orbit_consistency(state.classification.case.value, scan)
        return StageOutput(updates={"orbit_scan": scan})


class BettiConsistencyStage(BaseStage):
    """Skipped when the spec carries no b1."""

    name = "betti_consistency"

    def run(self, state, context: PipelineContext) -> StageOutput:
        b1 = state.spec.metadata.b1
        if b1 is None:
            return StageOutput()
        return StageOutput(updates={"betti": betti_consistency(b1, state.classification)})
