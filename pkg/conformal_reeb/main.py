"""
Command-line entry point.

    conformal-reeb classify <spec> [--backend frame|grid] [--grid-n N] [--tol X]
                                   [--report text|structured] [--orbit-scan] [--plots DIR]
    conformal-reeb batch <spec>... [same options]
    conformal-reeb fixtures list
    conformal-reeb selftest [--quick]

Reports go to stdout, logs to stderr. The exit status is the run's exit code.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from pydantic import ValidationError

from conformal_reeb.config import settings
from conformal_reeb.core.logging import get_logger, setup_logging
from conformal_reeb.executor.pipeline_executor import run_pipeline
from conformal_reeb.schemas.run_config import OrbitScanConfig, RunConfig
from conformal_reeb.services.reporting import build_report, canonical_json, emit_report, write_plots
from conformal_reeb.services.spec_loader import fixture_names
from conformal_reeb.steps.registry import STAGE_ORDER

logger = get_logger(__name__)

PARSE_EXIT = 4


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the parse-error code instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(PARSE_EXIT, f"{self.prog}: error: {message}\n")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["frame", "grid"])
    parser.add_argument("--grid-n", type=int, dest="grid_n")
    parser.add_argument("--tol", type=float, dest="tolerance")
    parser.add_argument("--report", choices=["text", "structured"], default="text")
    parser.add_argument("--orbit-scan", action="store_true", dest="orbit_scan")
    parser.add_argument("--orbit-periods", type=float, dest="orbit_periods")
    parser.add_argument("--orbit-threshold", type=float, dest="orbit_threshold")
    parser.add_argument("--plots", type=Path, dest="plots_dir")
    parser.add_argument("--stages", help=f"comma-separated; run stops after the last one ({', '.join(STAGE_ORDER)})")
    parser.add_argument("--product-a", type=float, default=0.0, dest="product_a")
    parser.add_argument("--product-b", type=float, default=1.0, dest="product_b")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="conformal-reeb", description=settings.app_name)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    classify = commands.add_parser("classify", help="classify one spec file or bundled fixture")
    classify.add_argument("spec")
    _add_run_options(classify)

    batch = commands.add_parser("batch", help="classify several specs in parallel")
    batch.add_argument("specs", nargs="+")
    batch.add_argument("--workers", type=int)
    _add_run_options(batch)

    fixtures = commands.add_parser("fixtures", help="bundled fixtures")
    fixtures.add_argument("action", choices=["list"])

    selftest = commands.add_parser("selftest", help="run the invariant suite")
    selftest.add_argument("--quick", action="store_true", help="50 randomized cases per property instead of 1000")
    return parser


def config_from_args(args: argparse.Namespace, spec: str) -> RunConfig:
    """
    Raises:
        ValidationError: invalid option values
    """
    scan: dict = {"enabled": args.orbit_scan}
    if args.orbit_periods is not None:
        scan["horizon_periods"] = args.orbit_periods
    if args.orbit_threshold is not None:
        scan["threshold"] = args.orbit_threshold
    return RunConfig(
        spec_path=Path(spec),
        backend=args.backend,
        grid_n=args.grid_n,
        tolerance=args.tolerance,
        stages=tuple(name.strip() for name in args.stages.split(",")) if args.stages else None,
        report_format=args.report,
        plots_dir=args.plots_dir,
        orbit_scan=OrbitScanConfig(**scan),
        product_a=args.product_a,
        product_b=args.product_b,
    )


def classify_one(config: RunConfig) -> tuple[str, str, int]:
    """Run one pipeline. Returns (spec name, emitted report, exit code)."""
    run = run_pipeline(config)
    if config.plots_dir is not None:
        write_plots(run, config.plots_dir / config.spec_path.stem)
    report = build_report(run)
    return config.spec_path.name, emit_report(report, config.report_format), run.exit_code


def _batch_worker(config: RunConfig) -> tuple[str, dict, int]:
    setup_logging()
    run = run_pipeline(config)
    if config.plots_dir is not None:
        write_plots(run, config.plots_dir / config.spec_path.stem)
    return config.spec_path.name, build_report(run).model_dump(mode="python"), run.exit_code


def run_batch(configs: list[RunConfig], workers: int | None = None) -> tuple[str, int]:
    """
    Run pipelines in a process pool. Reports are merged keyed by spec name, sorted.

    Returns:
        (merged document, largest exit code)
    """
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_batch_worker, configs))
    merged = {name: report for name, report, _ in sorted(results, key=lambda item: item[0])}
    return canonical_json(merged), max((code for _, _, code in results), default=0)


def selftest(quick: bool = False) -> int:
    import pytest

    os.environ["CONFORMAL_REEB_HYPOTHESIS_PROFILE"] = "dev" if quick else "selftest"
    tests = Path(__file__).parent / "tests"
    return int(pytest.main(["-q", "-p", "no:cacheprovider", str(tests)]))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(10 if args.verbose else None)
    logger.debug(f"Starting {settings.app_name} v{settings.app_version}")

    if args.command == "fixtures":
        for name in fixture_names():
            print(name)
        return 0
    if args.command == "selftest":
        return selftest(args.quick)

    specs = [args.spec] if args.command == "classify" else args.specs
    try:
        configs = [config_from_args(args, spec) for spec in specs]
        for config in configs:
            if config.stages and set(config.stages) - set(STAGE_ORDER):
                raise ValueError(f"unknown stages: {sorted(set(config.stages) - set(STAGE_ORDER))}")
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_EXIT

    if args.command == "batch":
        document, exit_code = run_batch(configs, args.workers)
        sys.stdout.write(document)
        return exit_code

    _, document, exit_code = classify_one(configs[0])
    sys.stdout.write(document)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
