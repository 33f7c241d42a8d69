"""
Report assembly, canonical serialization, plots and the command line.
"""

import json
import os

import jsonschema
import numpy as np
import pytest

from conformal_reeb.executor.pipeline_executor import run_pipeline
from conformal_reeb.main import main
from conformal_reeb.services.reporting import (
    build_report,
    canonical_json,
    emit_report,
    parse_report,
    report_schema,
    write_plots,
)


@pytest.fixture
def heisenberg_run(run_config, executor):
    return run_pipeline(run_config("heisenberg"), executor)


class TestCanonicalJson:
    def test_sorted_keys_and_full_precision(self):
        text = canonical_json({"b": 0.1, "a": [1, None, True]})
        assert text == '{\n  "a": [\n    1,\n    null,\n    true\n  ],\n  "b": 0.10000000000000001\n}\n'

    def test_non_finite_becomes_null(self):
        assert json.loads(canonical_json({"x": float("nan"), "y": np.inf})) == {"x": None, "y": None}

    def test_numpy_scalars(self):
        assert canonical_json({"n": np.int64(3), "ok": np.bool_(False)}) == '{\n  "n": 3,\n  "ok": false\n}\n'


class TestRunReport:
    """Contents of the report."""

    def test_success_report(self, heisenberg_run):
        report = build_report(heisenberg_run)
        assert report.status == "success"
        assert report.exit_code == 0
        assert report.case == "sasakian"
        assert report.k == pytest.approx(1.0)
        assert report.scaling.contact_factor == pytest.approx(1.0)
        assert report.gates == {"pipeline_completed": True, "checks_passed": True, "betti": True, "normality": True}
        assert report.tool.libraries["numpy"] == np.__version__

    def test_failure_report(self, run_config, executor):
        report = build_report(run_pipeline(run_config("nonconformal_field"), executor))
        assert report.status == "failure"
        assert report.failure.stage == "conformal_factor"
        assert report.failure.residual > 0
        assert report.case is None
        assert report.gates["pipeline_completed"] is False

    def test_parse_failure_report(self, run_config):
        report = build_report(run_pipeline(run_config("nowhere/absent.toml")))
        assert report.failure.stage == "parse"
        assert report.exit_code == 4
        assert report.backend is None

    def test_product_note_on_co_kahler(self, run_config, executor):
        report = build_report(run_pipeline(run_config("flat_t3"), executor))
        assert report.product_kahler is not None
        assert report.product_kahler.printed_metric_compatibility > 0
        assert report.notes == [report.product_kahler.note]

    def test_orbit_gate_present_after_scan(self, run_config, executor):
        report = build_report(run_pipeline(run_config("heisenberg", orbit_scan=True), executor))
        assert report.gates["orbit_scan"] is True
        assert report.orbit_scan.distinct_orbits >= 2
        assert report.orbit_scan.verdict.startswith("orbits-found")


class TestSerialization:
    def test_structured_output_is_deterministic(self, run_config, executor):
        first = emit_report(build_report(run_pipeline(run_config("twisted_t3", grid_n=16), executor)))
        second = emit_report(build_report(run_pipeline(run_config("twisted_t3", grid_n=16), executor)))
        assert first == second

    def test_round_trip_is_byte_identical(self, heisenberg_run):
        text = emit_report(build_report(heisenberg_run))
        assert emit_report(parse_report(text)) == text

    def test_schema_validates_output(self, heisenberg_run):
        document = json.loads(emit_report(build_report(heisenberg_run)))
        jsonschema.validate(instance=document, schema=report_schema())
        assert "run_id" not in document

    def test_text_format(self, heisenberg_run):
        text = emit_report(build_report(heisenberg_run), "text")
        assert "case: sasakian" in text
        assert "status: success (exit 0)" in text
        assert text.endswith("\n")


class TestPlots:
    def test_writes_profiles_and_orbits(self, run_config, executor, tmp_path):
        run = run_pipeline(run_config("heisenberg", orbit_scan=True), executor)
        written = write_plots(run, tmp_path / "plots")
        assert {path.name for path in written} == {"tau_profile.csv", "tau_profile.png", "orbits.csv", "orbits.png"}
        assert all(path.stat().st_size > 0 for path in written)

    def test_grid_profile_has_one_row_per_sample(self, run_config, executor, tmp_path):
        run = run_pipeline(run_config("twisted_t3", grid_n=16, stages=("build_theta_omega",)), executor)
        write_plots(run, tmp_path)
        rows = np.loadtxt(tmp_path / "tau_profile.csv", delimiter=",", skiprows=1)
        assert rows.shape == (16, 2)

    def test_nothing_written_without_shs(self, run_config, tmp_path):
        assert write_plots(run_pipeline(run_config("nowhere/absent.toml")), tmp_path) == []


class TestCommandLine:
    def test_fixtures_list(self, capsys):
        assert main(["fixtures", "list"]) == 0
        names = capsys.readouterr().out.split()
        assert "heisenberg" in names
        assert names == sorted(names)

    def test_classify_structured(self, capsys):
        assert main(["classify", "heisenberg", "--report", "structured"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["case"] == "sasakian"
        assert document["config"]["spec"] == "heisenberg"

    def test_classify_negative_control_exit_code(self, capsys):
        assert main(["classify", "spacelike_field"]) == 2
        assert "failed at stage causal_character" in capsys.readouterr().out

    def test_missing_spec_exit_code(self, capsys):
        assert main(["classify", "nowhere/absent.toml", "--report", "structured"]) == 4
        assert json.loads(capsys.readouterr().out)["failure"]["stage"] == "parse"

    def test_invalid_grid_resolution(self, capsys):
        assert main(["classify", "twisted_t3", "--grid-n", "12"]) == 4
        assert "grid_n" in capsys.readouterr().err

    def test_unknown_stage(self, capsys):
        assert main(["classify", "heisenberg", "--stages", "classify,bogus"]) == 4

    def test_plots_option(self, tmp_path, capsys):
        assert main(["classify", "heisenberg", "--plots", str(tmp_path)]) == 0
        assert (tmp_path / "heisenberg" / "tau_profile.csv").is_file()

    def test_batch_merges_by_name(self, capsys):
        assert main(["batch", "heisenberg", "flat_t3", "--report", "structured", "--workers", "2"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert list(document) == ["flat_t3", "heisenberg"]
        assert document["heisenberg"]["case"] == "sasakian"

    def test_usage_error_exits_with_parse_code(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["classify", "heisenberg", "--backend", "foo"])
        assert info.value.code == 4
        assert "invalid choice" in capsys.readouterr().err

    def test_selftest_defaults_to_full_profile(self, monkeypatch):
        calls = []
        monkeypatch.setenv("CONFORMAL_REEB_HYPOTHESIS_PROFILE", "unset")
        monkeypatch.setattr(pytest, "main", lambda args: calls.append(os.environ["CONFORMAL_REEB_HYPOTHESIS_PROFILE"]) or 0)
        assert main(["selftest"]) == 0
        assert main(["selftest", "--quick"]) == 0
        assert calls == ["selftest", "dev"]
