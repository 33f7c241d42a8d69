"""
Report assembly, canonical serialization and optional plots.

Structured reports are JSON with sorted keys and every float written with 17
significant digits, so emitting a parsed report reproduces it byte for byte.
"""

import json
from pathlib import Path
from typing import Any, Literal

import jsonschema
import matplotlib
import numpy as np
import pydantic
import scipy
import sympy

from conformal_reeb.config import settings
from conformal_reeb.core.logging import get_logger
from conformal_reeb.executor.pipeline_executor import PipelineRun
from conformal_reeb.schemas.report import (
    BettiRecord,
    CheckRecord,
    DetectionRecord,
    FailureRecord,
    OrbitScanRecord,
    ProductRecord,
    RunReport,
    ScalingRecord,
    StageRecordModel,
    Stats,
    ToolRecord,
)

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = get_logger(__name__)

ReportFormat = Literal["text", "structured"]


# ============================================================================
# Assembly
# ============================================================================


def _stats(field) -> Stats | None:
    if field is None:
        return None
    low, mean, high = field.stats()
    return Stats(min=low, mean=mean, max=high)


def tool_record() -> ToolRecord:
    return ToolRecord(
        name="conformal-reeb",
        version=settings.app_version,
        libraries={
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "sympy": sympy.__version__,
            "pydantic": pydantic.VERSION,
        },
    )


def build_report(run: PipelineRun) -> RunReport:
    """Collect everything a run produced into a RunReport."""
    state = run.state
    spec = state.spec if state is not None else None
    classification = state.classification if state is not None else None

    checks = [
        CheckRecord(stage=stage, name=check.name, residual=check.residual, tolerance=check.tolerance, passed=check.passed)
        for stage, check in run.checks
    ]
    gates: dict[str, bool] = {
        "pipeline_completed": run.succeeded,
        "checks_passed": all(check.passed for check in checks),
    }
    notes: list[str] = []

    failure = None
    if run.failure is not None:
        failure = FailureRecord(
            stage=run.failure.stage,
            code=run.failure.code,
            message=run.failure.message,
            residual=run.failure.residual,
            exit_code=run.failure.exit_code,
        )

    scan_record = None
    if state is not None and state.orbit_scan is not None:
        scan = state.orbit_scan
        scan_record = OrbitScanRecord(
            verdict=scan.summary(),
            distinct_orbits=scan.distinct_orbits,
            realization=scan.realization,
            horizon=scan.horizon,
            threshold=scan.threshold,
            step=scan.step,
            detections=[
                DetectionRecord(initial_point=list(d.initial_point), period=d.period, recurrence_distance=d.recurrence_distance)
                for d in scan.detections
            ],
        )
        gates["orbit_scan"] = True

    betti_record = None
    if state is not None and state.betti is not None:
        betti_record = BettiRecord(b1=state.betti.b1, case=state.betti.case, passed=state.betti.passed)
        gates["betti"] = bool(state.betti.passed)

    product_record = None
    if state is not None and state.product is not None:
        product = state.product
        product_record = ProductRecord(
            a=run.config.product_a,
            b=run.config.product_b,
            residuals=product.residuals,
            printed_metric_compatibility=product.printed_metric_compatibility,
            note=product.note,
        )
        notes.append(product.note)

    scaling = None
    if classification is not None:
        certificate = classification.scaling
        scaling = ScalingRecord(
            k=certificate.k,
            metric_scale=certificate.metric_scale,
            orientation_sign=certificate.orientation_sign,
            contact_factor=certificate.contact_factor,
        )
    if state is not None and state.nijenhuis_residual is not None:
        gates["normality"] = bool(state.nijenhuis_residual <= run.tolerance)

    return RunReport(
        tool=tool_record(),
        spec=run.config.spec_path.name,
        backend=spec.backend if spec is not None else None,
        grid_n=getattr(spec.space, "n", None) if spec is not None else None,
        tolerance=run.tolerance,
        status="success" if run.succeeded else "failure",
        exit_code=run.exit_code,
        case=classification.case.value if classification is not None else None,
        k=classification.k if classification is not None else None,
        sigma=_stats(state.conformal.sigma) if state is not None and state.conformal is not None else None,
        tau=_stats(state.shs.tau) if state is not None and state.shs is not None else None,
        alpha_max_norm=state.decomposition.alpha.max_norm() if state is not None and state.decomposition is not None else None,
        normality_residual=state.nijenhuis_residual if state is not None else None,
        scaling=scaling,
        checks=checks,
        stages=[StageRecordModel(name=record.name, status=record.status) for record in run.records],
        failure=failure,
        orbit_scan=scan_record,
        betti=betti_record,
        product_kahler=product_record,
        gates=gates,
        notes=notes,
        config=run.config.echo(),
    )


# ============================================================================
# Serialization
# ============================================================================


def _encode(value: Any, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        # + 0.0 folds -0.0 into 0.0
        return format(float(value) + 0.0, ".17g") if np.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(key))}: {_encode(value[key], indent + 1)}" for key in sorted(value, key=str)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(f"{inner}{_encode(item, indent + 1)}" for item in value) + f"\n{pad}]"
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def canonical_json(data: Any) -> str:
    """Sorted keys, two-space indent, 17 significant digits, trailing newline."""
    return _encode(data, 0) + "\n"


def report_schema() -> dict:
    return RunReport.model_json_schema()


def emit_report(report: RunReport, fmt: ReportFormat = "structured") -> str:
    """
    Serialize a report.

    The structured document is validated against the report's JSON schema before it is returned.
    """
    if fmt == "text":
        return format_text(report)
    text = canonical_json(report.model_dump(mode="python"))
    jsonschema.validate(instance=json.loads(text), schema=report_schema())
    return text


def parse_report(text: str) -> RunReport:
    return RunReport.model_validate(json.loads(text))


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6g}"


def format_text(report: RunReport) -> str:
    """Human-readable summary."""
    lines = [
        f"spec: {report.spec}",
        f"status: {report.status} (exit {report.exit_code})",
        f"backend: {report.backend or 'n/a'}" + (f" (N = {report.grid_n})" if report.grid_n else ""),
        f"tolerance: {report.tolerance:.3g}",
    ]
    if report.case is not None:
        lines.append(f"case: {report.case}")
        lines.append(f"k: {_fmt(report.k)}")
    for label, stats in (("sigma", report.sigma), ("tau", report.tau)):
        if stats is not None:
            lines.append(f"{label}: min {_fmt(stats.min)}  mean {_fmt(stats.mean)}  max {_fmt(stats.max)}")
    if report.normality_residual is not None:
        lines.append(f"normality residual: {report.normality_residual:.3e}")
    if report.orbit_scan is not None:
        lines.append(f"orbit scan: {report.orbit_scan.verdict} ({report.orbit_scan.realization}, T = {report.orbit_scan.horizon:.6g})")
    if report.betti is not None:
        lines.append(f"betti: b1 = {report.betti.b1} -> {'pass' if report.betti.passed else 'fail'}")
    if report.failure is not None:
        failure = report.failure
        lines.append(f"failed at stage {failure.stage}: {failure.code}")
        lines.append(f"  {failure.message}")
        if failure.residual is not None:
            lines.append(f"  residual: {failure.residual:.6g}")
    if report.checks:
        lines.append("checks:")
        width = max(len(f"{c.stage}.{c.name}") for c in report.checks)
        for check in report.checks:
            label = f"{check.stage}.{check.name}".ljust(width)
            status = "ok" if check.passed else "FAIL"
            lines.append(f"  {label}  {check.residual:.3e} <= {check.tolerance:.1e}  {status}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


# ============================================================================
# Plots
# ============================================================================


def write_plots(run: PipelineRun, directory: Path) -> list[Path]:
    """
    tau_profile.csv/.png (tau along x at t = y = 0) and, after an orbit scan,
    orbits.csv/.png (first two embedding coordinates of every trajectory).
    """
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    state = run.state
    if state is None or state.shs is None:
        return written

    tau = state.shs.tau
    space = tau.space
    if space.kind == "grid":
        xs = space.axis(1)
        values = tau.values[0, :, 0]
    else:
        xs = np.linspace(0.0, 1.0, 32, endpoint=False)
        values = np.full_like(xs, float(tau.values))
    csv_path = directory / "tau_profile.csv"
    np.savetxt(csv_path, np.column_stack([xs, values]), delimiter=",", header="x,tau", comments="")
    figure, axes = plt.subplots(figsize=(6, 4))
    axes.plot(xs, values, marker=".")
    axes.set_xlabel("x")
    axes.set_ylabel("tau")
    axes.set_title(f"tau profile: {run.config.spec_path.name}")
    figure.tight_layout()
    figure.savefig(directory / "tau_profile.png", dpi=120)
    plt.close(figure)
    written += [csv_path, directory / "tau_profile.png"]

    scan = state.orbit_scan
    if scan is not None and scan.paths is not None:
        rows = []
        times = np.arange(scan.paths.shape[1]) * scan.step
        for index, path in enumerate(scan.paths):
            rows.append(np.column_stack([np.full(len(path), index), times, path[:, 0], path[:, 1]]))
        csv_path = directory / "orbits.csv"
        np.savetxt(csv_path, np.vstack(rows), delimiter=",", header="sample,time,c0,c1", comments="")
        figure, axes = plt.subplots(figsize=(5, 5))
        for index, path in enumerate(scan.paths):
            axes.plot(path[:, 0], path[:, 1], ".", markersize=1, label=f"sample {index}")
        axes.set_xlabel("c0")
        axes.set_ylabel("c1")
        axes.set_title(f"orbits ({scan.realization}): {scan.summary()}")
        figure.tight_layout()
        figure.savefig(directory / "orbits.png", dpi=120)
        plt.close(figure)
        written += [csv_path, directory / "orbits.png"]

    logger.info(f"Wrote {len(written)} plot files to {directory}")
    return written
