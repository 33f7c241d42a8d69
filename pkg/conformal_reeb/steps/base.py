"""
BaseStage - shared execute() for every pipeline stage.

Subclasses implement run(state, context) -> StageOutput and raise
ConformalReebError subclasses on failure; execute() turns both outcomes into a
StageResult so that no exception crosses the contract.
"""

from datetime import datetime, timezone
from typing import Any

from conformal_reeb.core.exceptions import ConformalReebError
from conformal_reeb.core.stage_contract import (
    Check,
    PipelineContext,
    StageError,
    StageMetadata,
    StageOutput,
    StageResult,
)


class BaseStage:
    """Template for a stateless stage."""

    name: str = "stage"

    def execute(self, state: Any, context: PipelineContext) -> StageResult:
        started_at = datetime.now(timezone.utc)
        try:
            output = self.run(state, context)
        except ConformalReebError as exc:
            return self._fail(started_at, exc)
        return self._success(started_at, output)

    def run(self, state: Any, context: PipelineContext) -> StageOutput:
        raise NotImplementedError

    @staticmethod
    def checks(residuals: dict[str, float], tolerance: float) -> list[Check]:
        return [Check.of(name, residual, tolerance) for name, residual in residuals.items()]

    def _success(self, started_at: datetime, output: StageOutput) -> StageResult:
        finished_at = datetime.now(timezone.utc)
        duration_ms = int((finished_at - started_at).total_seconds() * 1000)
        metadata = StageMetadata(duration_ms=duration_ms, started_at=started_at, finished_at=finished_at)
        return StageResult(status="success", output=output, metadata=metadata)

    def _fail(self, started_at: datetime, exc: ConformalReebError) -> StageResult:
        finished_at = datetime.now(timezone.utc)
        duration_ms = int((finished_at - started_at).total_seconds() * 1000)
        metadata = StageMetadata(duration_ms=duration_ms, started_at=started_at, finished_at=finished_at)
        error = StageError(
            code=exc.code,
            message=str(exc),
            stage=self.name,
            residual=exc.residual,
            exit_code=exc.exit_code,
        )
        return StageResult(status="failure", error=error, metadata=metadata)
