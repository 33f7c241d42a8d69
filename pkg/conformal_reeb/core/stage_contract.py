"""
Stage Contract

Every pipeline stage conforms to this contract.

Key Principles:
1. The executor never inspects what a stage computes; it only calls execute()
2. Stages are stateless; all state lives in the immutable PipelineState
3. Every execution produces a StageResult; no exception escapes the contract
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Protocol
from uuid import UUID

from conformal_reeb.schemas.run_config import RunConfig


# ============================================================================
# Stage interface
# ============================================================================


class Stage(Protocol):
    """
    The execution contract all pipeline stages implement.

    Contract:
        execute(state, context) -> StageResult

    Example:
        class MyStage:
            name = "my_stage"

            def execute(self, state, context):
                return StageResult(status="success", output=StageOutput(updates={}))
    """

    name: str

    def execute(self, state: Any, context: "PipelineContext") -> "StageResult":
        """
        Execute the stage against the current pipeline state.

        Args:
            state: The PipelineState produced by earlier stages
            context: Run-level context (config, tolerance, run id)

        Returns:
            StageResult: success with state updates, or failure with a StageError

        Note:
            This method should never raise; errors go into StageResult.error
        """
        ...


# ============================================================================
# Results
# ============================================================================


@dataclass(frozen=True)
class Check:
    """One numerically verified identity."""

    name: str
    residual: float
    tolerance: float
    passed: bool

    @classmethod
    def of(cls, name: str, residual: float, tolerance: float) -> "Check":
        return cls(name=name, residual=float(residual), tolerance=float(tolerance), passed=bool(residual <= tolerance))

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class StageOutput:
    """
    What a successful stage hands back to the executor.

    Properties:
        updates: PipelineState fields to replace
        checks: Identities verified by the stage
    """

    updates: dict[str, Any] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)


@dataclass
class StageError:
    """
    Structured error information for a failed stage.

    Properties:
        code: Machine-readable error code (e.g. "NOT_CONFORMAL")
        message: Human-readable message
        stage: Name of the stage that failed
        residual: The offending residual, when the error carries one
        exit_code: Process exit status this failure maps to
    """

    code: str
    message: str
    stage: str
    residual: float | None = None
    exit_code: int = 3

    def __post_init__(self):
        """Validate exit code."""
        if self.exit_code not in (2, 3, 4):
            raise ValueError(f"Invalid exit_code: {self.exit_code}. Must be 2, 3 or 4")


@dataclass
class StageMetadata:
    """
    Execution metadata for observability.

    Properties:
        duration_ms: How long the stage took (in milliseconds)
        started_at: When execution started
        finished_at: When execution finished
    """

    duration_ms: int
    started_at: datetime
    finished_at: datetime


@dataclass
class StageResult:
    """
    The result shape returned by every stage.

    Properties:
        status: Either "success" or "failure"
        output: StageOutput (only on success)
        error: StageError (only on failure)
        metadata: Timing metadata
    """

    status: str  # "success" | "failure"
    output: StageOutput | None = None
    error: StageError | None = None
    metadata: StageMetadata | None = None

    def __post_init__(self):
        """Validate the result structure."""
        if self.status not in ("success", "failure"):
            raise ValueError(f"Invalid status: {self.status}. Must be 'success' or 'failure'")

        if self.status == "success" and self.error is not None:
            raise ValueError("Success result cannot have an error")

        if self.status == "failure" and self.error is None:
            raise ValueError("Failure result must have an error")


# ============================================================================
# Context
# ============================================================================


@dataclass(frozen=True)
class PipelineContext:
    """
    Runtime context provided to every stage.

    Properties:
        run_id: Identifier of the current run (logging only, never reported)
        config: The validated RunConfig
        tolerance: The resolved tolerance for this run
    """

    run_id: UUID
    config: RunConfig
    tolerance: float
