"""
End-to-end pipeline runs on the bundled fixtures.
"""

from pathlib import Path

import numpy as np
import pytest

from conformal_reeb.executor.pipeline_executor import run_pipeline
from conformal_reeb.schemas.run_config import OrbitScanConfig, RunConfig
from conformal_reeb.schemas.spec_file import RawSpec
from conformal_reeb.services.structure_classifier import Case, mapping_torus_document
from conformal_reeb.steps.registry import STAGE_ORDER


class TestPositiveFixtures:
    """Runs that complete with exit 0."""

    def test_flat_torus(self, run_config, executor):
        run = run_pipeline(run_config("flat_t3"), executor)
        assert run.exit_code == 0, run.failure
        assert run.state.classification.case is Case.CO_KAHLER
        assert abs(run.state.classification.k) <= 1e-12
        assert run.state.product is not None
        assert run.state.betti.passed
        assert [record.name for record in run.records] == list(STAGE_ORDER)

    def test_heisenberg(self, run_config, executor):
        run = run_pipeline(run_config("heisenberg"), executor)
        assert run.exit_code == 0, run.failure
        assert run.state.classification.case is Case.SASAKIAN
        assert run.state.classification.k == pytest.approx(1.0, abs=1e-10)
        assert run.state.nijenhuis_residual <= 1e-12
        assert run.state.product is None
        assert all(check.passed for _, check in run.checks)

    def test_su2_with_orbit_scan(self, run_config, executor):
        run = run_pipeline(run_config("su2_hopf", orbit_scan=True), executor)
        assert run.exit_code == 0, run.failure
        assert run.state.classification.k == pytest.approx(2.0, abs=1e-10)
        assert run.state.orbit_scan.distinct_orbits >= 2

    @pytest.mark.parametrize("name", ["warped_t3", "twisted_t3", "flat_t3_grid"])
    def test_grid_fixtures_are_co_kahler(self, run_config, executor, name):
        run = run_pipeline(run_config(name, grid_n=16), executor)
        assert run.exit_code == 0, run.failure
        assert run.state.classification.case is Case.CO_KAHLER
        assert abs(run.state.classification.k) <= 1e-8

    @pytest.mark.parametrize("rho", [1.0, np.pi / 2, np.pi])
    def test_mapping_torus(self, executor, rho):
        """Rotations by pi and pi/2 close their Reeb orbits after two and four laps; all stay co-Kahler."""
        scan = OrbitScanConfig(enabled=True, horizon_periods=5, samples_per_axis=1)
        config = RunConfig(spec_path=Path("mapping_torus"), orbit_scan=scan)
        run = executor.execute(mapping_torus_document(rho), config)
        assert run.exit_code == 0, run.failure
        assert run.state.classification.case is Case.CO_KAHLER
        assert abs(run.state.classification.k) <= 1e-8

    def test_backends_agree_on_flat_torus(self, run_config, executor):
        frame = run_pipeline(run_config("flat_t3", stages=("classify",)), executor)
        grid = run_pipeline(run_config("flat_t3", backend="grid", grid_n=16, stages=("classify",)), executor)
        assert grid.state.spec.backend == "grid"
        assert abs(frame.state.classification.k - grid.state.classification.k) <= 1e-8


class TestNegativeControls:
    """Runs that stop with a hypothesis or parse error."""

    def test_spacelike_field(self, run_config, executor):
        run = run_pipeline(run_config("spacelike_field"), executor)
        assert run.exit_code == 2
        assert run.failure.stage == "causal_character"
        assert run.failure.code == "NOT_TIMELIKE"

    def test_nonconformal_field(self, run_config, executor):
        run = run_pipeline(run_config("nonconformal_field"), executor)
        assert run.exit_code == 2
        assert run.failure.stage == "conformal_factor"
        assert run.failure.residual > 1.0

    def test_missing_file(self, run_config):
        run = run_pipeline(run_config("nowhere/absent.toml"))
        assert run.exit_code == 4
        assert run.failure.stage == "parse"
        assert run.state is None

    def test_override_rejected_at_validate(self, run_config, executor):
        run = run_pipeline(run_config("heisenberg", backend="grid"), executor)
        assert run.exit_code == 4
        assert run.failure.stage == "validate"


class TestStageSelection:
    def test_stop_after_stage(self, run_config, executor):
        run = run_pipeline(run_config("heisenberg", stages=("build_theta_omega",)), executor)
        assert run.succeeded
        assert run.records[-1].name == "build_theta_omega"
        assert run.state.classification is None
        assert run.state.shs is not None


class TestSpecErrors:
    def test_wrong_signature_stops_at_validate(self, executor):
        raw = RawSpec.model_validate(
            {
                "manifold": {"name": "two_times", "backend": "frame"},
                "metric": {"components": {"11": -1.0, "22": -1.0, "33": 1.0}},
                "field": {"components": [1.0, 0.0, 0.0]},
            }
        )
        run = executor.execute(raw, RunConfig(spec_path=Path("two_times")))
        assert run.failure.stage == "validate"
        assert run.failure.code == "SIGNATURE_MISMATCH"
        assert run.exit_code == 4
