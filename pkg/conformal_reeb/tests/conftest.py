"""
Pytest configuration and fixtures.

Hypothesis profiles:
    dev       default, 50 examples per property
    selftest  1000 examples per property (set by `conformal-reeb selftest --full`)
"""

import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings as hypothesis_settings

from conformal_reeb.executor.pipeline_executor import PipelineExecutor
from conformal_reeb.models.fields import Metric, Signature, VectorField
from conformal_reeb.models.frame_algebra import abelian, validate_frame_algebra
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.schemas.run_config import OrbitScanConfig, RunConfig
from conformal_reeb.services.dynamics import HEISENBERG_CONSTANTS, SU2_CONSTANTS
from conformal_reeb.services.spec_loader import fixture_path, load_fixture, load_spec_file

hypothesis_settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis_settings.register_profile(
    "selftest",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hypothesis_settings.load_profile(os.environ.get("CONFORMAL_REEB_HYPOTHESIS_PROFILE", "dev"))


# ============================================================================
# Spaces
# ============================================================================


@pytest.fixture
def flat_frame():
    return abelian()


@pytest.fixture
def heisenberg_frame():
    return validate_frame_algebra(HEISENBERG_CONSTANTS, 1.0, "heisenberg")


@pytest.fixture
def su2_frame():
    return validate_frame_algebra(SU2_CONSTANTS, 1.0, "su2")


@pytest.fixture
def grid16():
    return GridChart(n=16)


@pytest.fixture
def grid32():
    return GridChart(n=32)


# ============================================================================
# Metrics and fields
# ============================================================================


def lorentz_diag(space, entries=(-1.0, 1.0, 1.0)) -> Metric:
    return Metric(space, np.diag(entries), Signature.LORENTZIAN)


@pytest.fixture
def flat_metric(flat_frame):
    return lorentz_diag(flat_frame)


@pytest.fixture
def heisenberg_metric(heisenberg_frame):
    return lorentz_diag(heisenberg_frame, (1.0, 1.0, -1.0))


@pytest.fixture
def d_t(flat_frame):
    return VectorField.basis_vector(flat_frame, 0)


# ============================================================================
# Specs and runs
# ============================================================================


@pytest.fixture
def heisenberg_spec():
    return load_fixture("heisenberg")


@pytest.fixture
def flat_spec():
    return load_fixture("flat_t3")


@pytest.fixture
def raw_fixture():
    """Parsed, unvalidated spec document of a bundled fixture."""

    def load(name: str):
        return load_spec_file(fixture_path(name))

    return load


@pytest.fixture
def run_config():
    """RunConfig for a bundled fixture."""

    def make(name: str, **overrides) -> RunConfig:
        scan = overrides.pop("orbit_scan", False)
        return RunConfig(spec_path=Path(name), orbit_scan=OrbitScanConfig(enabled=scan), **overrides)

    return make


@pytest.fixture
def executor():
    return PipelineExecutor(timeout_seconds=60)


@pytest.fixture
def pipeline_state(executor, raw_fixture, run_config):
    """Final PipelineState of a fixture run that stops after the named stage."""

    def run(name: str, stop_after: str = "decompose_basic_class", **overrides):
        result = executor.execute(raw_fixture(name), run_config(name, stages=(stop_after,), **overrides))
        assert result.succeeded, result.failure
        return result.state

    return run
