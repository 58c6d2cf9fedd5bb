"""
GP-Localize experiment harness.

Command-line entry point:

    python -m src.main synth          --config exp.env --out results/
    python -m src.main select-support --config exp.env --out results/
    python -m src.main localize       --config exp.env --method gp-localize --seed 3
    python -m src.main compare        --config exp.env [--per-field]
    python -m src.main bench          --config exp.env

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.config import get_settings
from src.engines.harness.benchmark import benchmark_timing
from src.engines.harness.experiment import (
    build_fields,
    run_comparison,
    run_experiment,
    run_field_robustness,
)
from src.engines.harness.fields import field_from_samples
from src.engines.harness.io import (
    load_locations_csv,
    load_samples_csv,
    save_error_curve_csv,
    save_field_csv,
    save_locations_csv,
    save_report_csv,
    save_robustness_csv,
    save_summary_csv,
    save_timing_csv,
)
from src.engines.harness.support import select_support_set
from src.kernel.errors import (
    ConfigError,
    DegenerateBeliefError,
    FieldFormatError,
    IllConditionedError,
    InvalidArgumentError,
)
from src.logging_config import configure_logging, get_logger
from src.schemas.experiment import ExperimentConfig, ExperimentReport, Method

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    if args.method:
        overrides["method"] = args.method[0]
        overrides["methods"] = args.method
    rows = getattr(args, "rows", None)
    cols = getattr(args, "cols", None)
    if rows is not None:
        overrides["rows"] = rows
    if cols is not None:
        overrides["cols"] = cols
    return config.with_overrides(**overrides) if overrides else config


def _write_reports(reports: List[ExperimentReport], out: Path) -> None:
    for report in reports:
        for run in report.runs:
            save_report_csv(run.records, out / f"report_{report.method.value}_seed{run.seed}.csv")
    by_method = {r.method: r for r in reports}
    save_summary_csv(by_method, out / "summary.csv")
    save_error_curve_csv(by_method, out / "error_curve.csv")


def cmd_synth(config: ExperimentConfig, args: argparse.Namespace, out: Path) -> None:
    if args.samples:
        samples = load_samples_csv(args.samples)
        h = config.hyperparams()[0]
        fields = [
            field_from_samples(
                samples, config.rows, config.cols, (0.0, 0.0), config.cell_size, h
            )
        ]
    else:
        fields = build_fields(config)
    for m, field in enumerate(fields):
        path = out / f"field_{m}.csv"
        save_field_csv(field, path)
        logger.info("Field written", extra={"path": str(path), "rows": field.rows, "cols": field.cols})


def cmd_select_support(config: ExperimentConfig, args: argparse.Namespace, out: Path) -> None:
    hyperparams = config.hyperparams()
    if args.candidates:
        candidates = load_locations_csv(args.candidates)
        pools = [candidates] * len(hyperparams)
    else:
        pools = [f.cell_centers() for f in build_fields(config)]
    for m, (pool, h) in enumerate(zip(pools, hyperparams)):
        support = select_support_set(pool, config.support_size, h)
        save_locations_csv(support.locations, out / f"support_{m}.csv")


def cmd_localize(config: ExperimentConfig, args: argparse.Namespace, out: Path) -> None:
    report = run_experiment(config)
    _write_reports([report], out)
    print(f"{report.method.value}: mean error {report.mean_error:.6g} over {len(report.runs)} run(s)")


def cmd_compare(config: ExperimentConfig, args: argparse.Namespace, out: Path) -> None:
    if args.per_field:
        robustness = run_field_robustness(config)
        save_robustness_csv(robustness, out / "robustness.csv")
        print(
            f"median single-field error {robustness.median_single_field_error:.6g}, "
            f"all fields {robustness.multi_field_error:.6g}"
        )
        return
    reports = run_comparison(config)
    _write_reports(list(reports.values()), out)
    for method, report in reports.items():
        print(f"{method.value}: mean error {report.mean_error:.6g}")


def cmd_bench(config: ExperimentConfig, args: argparse.Namespace, out: Path) -> None:
    series = benchmark_timing(config)
    save_timing_csv(series, out / "timing.csv")


COMMANDS = {
    "synth": cmd_synth,
    "select-support": cmd_select_support,
    "localize": cmd_localize,
    "compare": cmd_compare,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key=value experiment file")
    common.add_argument("--seed", type=int, default=None, help="run this single seed")
    common.add_argument("--out", type=str, default="results", help="output directory")
    common.add_argument(
        "--method",
        type=Method,
        action="append",
        choices=list(Method),
        metavar="METHOD",
        help="method to run (repeatable)",
    )

    parser = argparse.ArgumentParser(prog="gp-localize", description=__doc__.splitlines()[1])
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_settings().version}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="write field grid files")
    synth.add_argument("--samples", type=str, default=None, help="x,y,z measurements to grid")
    synth.add_argument("--rows", type=int, default=None)
    synth.add_argument("--cols", type=int, default=None)

    support = sub.add_parser("select-support", parents=[common], help="greedy support-set selection")
    support.add_argument("--candidates", type=str, default=None, help="x,y candidate locations")

    sub.add_parser("localize", parents=[common], help="run one method over the configured seeds")

    compare = sub.add_parser("compare", parents=[common], help="run every method on shared seeds")
    compare.add_argument(
        "--per-field", action="store_true", help="GP-Localize per single field and jointly"
    )

    sub.add_parser("bench", parents=[common], help="per-step timing series")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging(
        log_level=settings.log_level,
        environment=settings.environment,
        debug=settings.debug,
    )

    try:
        config = load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](config, args, out)
    except (ConfigError, FieldFormatError, ValidationError, InvalidArgumentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (IllConditionedError, DegenerateBeliefError) as e:
        logger.error("Numerical failure", extra={"error": str(e)})
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
