"""
Pipeline Executor

Runs the classification stages in proof order against an immutable state.

The executor:
- Resolves the run tolerance and builds the PipelineContext
- Executes stages sequentially, each under a timeout
- Validates every check record a stage reports
- Applies each stage's updates to a fresh PipelineState
- Stops on the first failure and records it with its stage name
"""

from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from typing import Any
from uuid import UUID, uuid4

import jsonschema
from func_timeout import FunctionTimedOut, func_timeout

from conformal_reeb.config import settings
from conformal_reeb.core.exceptions import ConformalReebError, SpecificationError
from conformal_reeb.core.logging import get_logger
from conformal_reeb.core.stage_contract import Check, PipelineContext, Stage, StageError, StageMetadata, StageResult
from conformal_reeb.schemas.run_config import RunConfig
from conformal_reeb.schemas.spec_file import RawSpec
from conformal_reeb.services.spec_loader import load_spec_file, resolve_spec_path
from conformal_reeb.steps.registry import STAGE_ORDER, create_stage

logger = get_logger(__name__)

CHECK_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "residual": {"type": "number", "minimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "passed": {"type": "boolean"},
    },
    "required": ["name", "residual", "tolerance", "passed"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class PipelineState:
    """Everything the stages have produced so far. Replaced, never mutated."""

    raw: RawSpec
    spec: Any = None
    causal: Any = None
    conformal: Any = None
    g_tilde: Any = None
    g_hat: Any = None
    geodesic: Any = None
    shs: Any = None
    reeb_solution: Any = None
    nonexact: Any = None
    decomposition: Any = None
    classification: Any = None
    structure: Any = None
    nijenhuis_residual: float | None = None
    chi: Any = None
    product: Any = None
    orbit_scan: Any = None
    betti: Any = None


@dataclass
class StageRecord:
    """What happened in one stage."""

    name: str
    status: str
    checks: list[Check] = field(default_factory=list)
    error: StageError | None = None
    metadata: StageMetadata | None = None


@dataclass
class PipelineRun:
    """
    The outcome of one pipeline invocation.

    Properties:
        run_id: Identifier used in logs only
        config: The RunConfig
        tolerance: Resolved tolerance
        state: Final PipelineState
        records: One StageRecord per executed stage
        failure: The first StageError, if any
    """

    run_id: UUID
    config: RunConfig
    tolerance: float
    state: PipelineState | None
    records: list[StageRecord] = field(default_factory=list)
    failure: StageError | None = None

    @property
    def succeeded(self) -> bool:
        return self.failure is None

    @property
    def exit_code(self) -> int:
        return 0 if self.failure is None else self.failure.exit_code

    @property
    def checks(self) -> list[tuple[str, Check]]:
        return [(record.name, check) for record in self.records for check in record.checks]


def resolve_tolerance(raw: RawSpec, config: RunConfig) -> float:
    """Run tolerance: the config override, else the backend default at the run's resolution."""
    if config.tolerance is not None:
        return config.tolerance
    backend = config.backend or raw.manifold.backend
    n = config.grid_n or raw.manifold.n or settings.default_grid_n
    return settings.tolerance_for(backend, n if backend == "grid" else None)


def stages_for(config: RunConfig) -> list[str]:
    """
    Canonical stage names to execute.

    When the config names stages, the run stops after the last of them in proof order.
    """
    if not config.stages:
        return list(STAGE_ORDER)
    unknown = set(config.stages) - set(STAGE_ORDER)
    if unknown:
        raise ValueError(f"Unknown stages: {sorted(unknown)}")
    last = max(STAGE_ORDER.index(name) for name in config.stages)
    return list(STAGE_ORDER[: last + 1])


class PipelineExecutor:
    """
    PipelineExecutor - runs the stages of one classification.

    Design principles:
    - Depends only on the Stage contract
    - Synchronous and linear
    - Stops on first failure
    - Timeouts and check-schema validation per stage
    """

    def __init__(self, timeout_seconds: float | None = None):
        self.timeout_seconds = timeout_seconds or settings.stage_timeout_seconds

    def execute(self, raw: RawSpec, config: RunConfig) -> PipelineRun:
        """
        Execute every stage against a parsed spec.

        Args:
            raw: The parsed spec document
            config: Run configuration

        Returns:
            PipelineRun: always returned, successful or not
        """
        context = PipelineContext(run_id=uuid4(), config=config, tolerance=resolve_tolerance(raw, config))
        run = PipelineRun(run_id=context.run_id, config=config, tolerance=context.tolerance, state=PipelineState(raw=raw))
        logger.info(f"Pipeline started: {raw.manifold.name} (run {context.run_id}, tolerance {context.tolerance:.3g})")

        for name in stages_for(config):
            stage = create_stage(name)
            logger.info(f"Stage started: {name}")
            result = self._execute_single_stage(stage, run.state, context)
            record = StageRecord(name=name, status=result.status, metadata=result.metadata)
            run.records.append(record)

            if result.status == "failure":
                record.error = result.error
                run.failure = result.error
                logger.warning(f"Stage failed: {result.error.code} ({result.error.message})")
                break

            record.checks = list(result.output.checks)
            run.state = self._apply(run.state, result.output.updates)
            logger.info(f"Stage completed successfully: {name}")

        if run.succeeded:
            logger.info("Pipeline completed successfully")
        else:
            logger.info(f"Pipeline failed at stage {run.failure.stage} with exit code {run.exit_code}")
        return run

    def _apply(self, state: PipelineState, updates: dict[str, Any]) -> PipelineState:
        known = {f.name for f in fields(PipelineState)}
        unknown = set(updates) - known
        if unknown:
            raise ValueError(f"Stage produced unknown state fields: {sorted(unknown)}")
        return replace(state, **updates)

    def _execute_single_stage(self, stage: Stage, state: PipelineState, context: PipelineContext) -> StageResult:
        """Run one stage under the timeout and validate its check records."""
        started_at = datetime.now(timezone.utc)
        try:
            result = func_timeout(self.timeout_seconds, stage.execute, args=(state, context))
        except FunctionTimedOut:
            return self._failure(
                started_at,
                StageError(
                    code="STAGE_TIMEOUT",
                    message=f"Stage timed out after {self.timeout_seconds} seconds",
                    stage=stage.name,
                ),
            )
        except ConformalReebError as exc:
            return self._failure(
                started_at,
                StageError(code=exc.code, message=str(exc), stage=stage.name, residual=exc.residual, exit_code=exc.exit_code),
            )
        except Exception as exc:
            logger.exception(f"Unexpected error in stage {stage.name}")
            return self._failure(
                started_at,
                StageError(
                    code="INTERNAL_ERROR",
                    message=f"{type(exc).__name__}: {exc}",
                    stage=stage.name,
                    exit_code=3,
                ),
            )

        if result.status == "success":
            for check in result.output.checks:
                try:
                    jsonschema.validate(instance=check.as_dict(), schema=CHECK_SCHEMA)
                except jsonschema.ValidationError as ve:
                    return self._failure(
                        started_at,
                        StageError(
                            code="CHECK_SCHEMA_VIOLATION",
                            message=f"Check '{check.name}' is malformed: {ve.message}",
                            stage=stage.name,
                        ),
                    )
                if not check.passed:
                    return self._failure(
                        started_at,
                        StageError(
                            code="CHECK_FAILED",
                            message=f"Check '{check.name}' residual {check.residual:.3e} above {check.tolerance:.3e}",
                            stage=stage.name,
                            residual=check.residual,
                        ),
                    )
        return result

    def _failure(self, started_at: datetime, error: StageError) -> StageResult:
        finished_at = datetime.now(timezone.utc)
        duration_ms = int((finished_at - started_at).total_seconds() * 1000)
        metadata = StageMetadata(duration_ms=duration_ms, started_at=started_at, finished_at=finished_at)
        return StageResult(status="failure", error=error, metadata=metadata)


def run_pipeline(config: RunConfig, executor: PipelineExecutor | None = None) -> PipelineRun:
    """
    Read the spec named by config.spec_path and run the pipeline on it.

    A spec that cannot be read yields a failed run tagged with stage "parse"; nothing raises.
    """
    try:
        raw = load_spec_file(resolve_spec_path(config.spec_path))
    except SpecificationError as exc:
        logger.warning(f"Could not read {config.spec_path}: {exc}")
        return PipelineRun(
            run_id=uuid4(),
            config=config,
            tolerance=config.tolerance or settings.tolerance or settings.frame_tolerance,
            state=None,
            failure=StageError(code=exc.code, message=str(exc), stage="parse", residual=exc.residual, exit_code=exc.exit_code),
        )
    return (executor or PipelineExecutor()).execute(raw, config)
