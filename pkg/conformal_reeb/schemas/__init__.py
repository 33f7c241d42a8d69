"""Pydantic schemas package."""

from conformal_reeb.schemas.report import RunReport
from conformal_reeb.schemas.run_config import OrbitScanConfig, RunConfig
from conformal_reeb.schemas.spec_file import RawSpec

__all__ = ["OrbitScanConfig", "RawSpec", "RunConfig", "RunReport"]
