"""Pipeline executor package."""

from conformal_reeb.executor.pipeline_executor import PipelineExecutor, PipelineRun, PipelineState, run_pipeline

__all__ = ["PipelineExecutor", "PipelineRun", "PipelineState", "run_pipeline"]
