"""
``sweep``: run a profile grid and check the acceptance properties.
"""
import argparse
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.app.commands.common import add_config_arguments, bind, emit, emit_table, run_config
from src.app.commands.gen_data import ensure_datasets
from src.app.exceptions import EXIT_NUMERIC, EXIT_OK
from src.app.logging_config import get_logger
from src.app.repository.sample_repository import dataset_path, sample_repository
from src.app.services.config_service import config_hash, sweep_configs
from src.app.services.reporting import brightness_histograms, check_desk_acceptance
from src.app.services.training import run_name, train
from src.models.variant import ModelVariant, Prediction
from src.schemas.config import RunConfig
from src.schemas.metrics import AcceptanceResult, HistogramResult, MetricRecord
from src.settings import settings

logger = get_logger(__name__)

HISTOGRAM_DIM = 200


def _is_histogram_run(cfg: RunConfig) -> bool:
    return (
        cfg.model.variant == ModelVariant.BASE
        and cfg.model.prediction == Prediction.EPS
        and cfg.dataset.dim == HISTOGRAM_DIM
        and cfg.scaling_rho == 1.0
    )


def run_sweep(base: RunConfig, runs_dir: Path, data_dir: Optional[Path] = None,
              only: Optional[List[str]] = None, progress: bool = True) -> List[AcceptanceResult]:
    """
    Train every grid configuration in sequence and check the results.

    Final samples of the n = 200 base runs are pooled against the pooled
    test sets for the brightness tail check.
    """
    configs = [c for c in sweep_configs(base) if not only or c.model.variant.value in only]
    records: List[MetricRecord] = []
    generated, reference = [], []

    for index, cfg in enumerate(configs, start=1):
        ensure_datasets(cfg, data_dir)
        n, seed = cfg.dataset.dim, cfg.dataset.seed
        train_data = sample_repository.load(dataset_path(n, seed, "train", data_dir), expected_dim=n)
        test_data = sample_repository.load(dataset_path(n, seed, "test", data_dir), expected_dim=n)

        run_id = run_name(cfg, config_hash(cfg))
        logger.info("Sweep run", extra={"index": index, "total": len(configs), "run_id": run_id})
        result = train(cfg, train_data, test_data, run_dir=runs_dir / run_id, run_id=run_id, progress=progress)
        records.extend(result.records)

        if _is_histogram_run(cfg) and result.final_samples is not None and len(result.final_samples):
            generated.append(result.final_samples.data)
            reference.append(test_data.data)

    histograms: Dict[str, HistogramResult] = {}
    if generated:
        histograms = brightness_histograms(
            {"base": np.concatenate(generated), "test": np.concatenate(reference)},
            k=base.dataset.k, bins=base.eval.histogram_bins,
        )
    return check_desk_acceptance(records, histograms)


def handle(args: argparse.Namespace) -> int:
    base = run_config(args)
    only = [v.strip() for v in args.only.split(",")] if args.only else None
    if args.dry_run:
        configs = [c for c in sweep_configs(base) if not only or c.model.variant.value in only]
        emit([run_name(c, config_hash(c)) for c in configs])
        return EXIT_OK

    runs_dir = args.runs_dir or Path(settings.RUNS_DIR) / f"sweep-{base.profile}"
    results = run_sweep(base, runs_dir, args.data_dir, only=only, progress=not args.no_progress)
    runs_dir.mkdir(parents=True, exist_ok=True)
    (runs_dir / "acceptance.json").write_text(
        "[\n" + ",\n".join(r.model_dump_json() for r in results) + "\n]\n", encoding="utf-8"
    )

    emit_table(
        [
            {"check": r.name, "status": "skipped" if r.skipped else ("pass" if r.passed else "FAIL"), "detail": r.detail}
            for r in results
        ],
        ("check", "status", "detail"),
    )
    failed = [r for r in results if not r.passed and not r.skipped]
    return EXIT_NUMERIC if failed else EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="Run a profile grid and check acceptance properties")
    add_config_arguments(parser)
    parser.add_argument("--only", help="Comma-separated variants to keep")
    parser.add_argument("--data-dir", type=Path, help="Dataset directory (default: DATA_DIR)")
    parser.add_argument("--runs-dir", type=Path, help="Output directory (default: RUNS_DIR/sweep-<profile>)")
    parser.add_argument("--dry-run", action="store_true", help="List the runs without training")
    parser.add_argument("--no-progress", action="store_true")
    bind(parser, handle, "sweep")
