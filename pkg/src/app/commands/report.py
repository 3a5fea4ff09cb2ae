"""
``report``: seed-aggregated metric curves and brightness histograms.
"""
import argparse
from pathlib import Path
from typing import Dict, List

from src.app.commands.common import bind, emit
from src.app.exceptions import EXIT_OK, SampleFileError
from src.app.repository.run_log_repository import run_log_repository
from src.app.repository.sample_repository import sample_repository
from src.app.services.reporting import (
    AGGREGATE_COLUMNS,
    HISTOGRAM_COLUMNS,
    METRICS,
    aggregate_runs,
    brightness_histograms,
    histogram_rows,
    plot_histograms,
    plot_metric_curves,
    write_rows,
)
from src.app.services.training import RUN_LOG_NAME
from src.settings import settings


def collect_run_logs(paths: List[Path]) -> List[Path]:
    """Expand directories into the run logs below them."""
    found: List[Path] = []
    for path in paths:
        if path.is_dir():
            found.extend(sorted(path.rglob(RUN_LOG_NAME)))
        else:
            found.append(path)
    return found


def _labelled(items: List[str]) -> Dict[str, Path]:
    labelled = {}
    for item in items:
        if "=" not in item:
            raise SampleFileError(f"--samples expects label=path, got {item!r}")
        label, path = item.split("=", 1)
        labelled[label.strip()] = Path(path.strip())
    return labelled


def handle(args: argparse.Namespace) -> int:
    out_dir = args.out_dir or Path(settings.RUNS_DIR) / "report"
    written: List[str] = []

    logs = collect_run_logs(args.run_logs)
    if logs:
        rows = aggregate_runs(run_log_repository.read_many(logs))
        written.append(str(write_rows(out_dir / "aggregate.csv", rows, AGGREGATE_COLUMNS)))
        for metric in METRICS:
            written.append(str(plot_metric_curves(rows, metric, out_dir / f"{metric}.svg")))

    if args.samples:
        sets = {label: sample_repository.load(path).data for label, path in _labelled(args.samples).items()}
        histograms = brightness_histograms(sets, k=args.k, bins=args.bins)
        written.append(str(write_rows(out_dir / "histograms.csv", histogram_rows(histograms), HISTOGRAM_COLUMNS)))
        written.append(str(plot_histograms(histograms, out_dir / "histograms.svg")))

    emit({"run_logs": len(logs), "files": written})
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="Aggregate run logs into CSV / SVG reports")
    parser.add_argument("run_logs", type=Path, nargs="*", help="Run-log files or directories holding them")
    parser.add_argument("--samples", action="append", default=[], metavar="LABEL=PATH",
                        help="Sample file for the brightness histogram; may be repeated")
    parser.add_argument("--k", type=float, default=2.0, help="Histogram range [-k, k]")
    parser.add_argument("--bins", type=int, default=10)
    parser.add_argument("--out-dir", type=Path, help="Output directory (default: RUNS_DIR/report)")
    bind(parser, handle, "report")
