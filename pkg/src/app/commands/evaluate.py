"""
``eval``: metrics between two sample files.

When the first file is generated (its sidecar records the producing run),
the metrics are also appended as a row to a run log, by default the
``run_log.csv`` next to that file.
"""
import argparse
from pathlib import Path

from src.app.commands.common import bind, emit
from src.app.exceptions import EXIT_OK
from src.app.logging_config import get_logger
from src.app.repository.run_log_repository import run_log_repository
from src.app.repository.sample_repository import sample_repository
from src.app.services.evaluation import evaluate_samples, record_from_samples
from src.models.variant import SampleSource
from src.schemas.config import EvalConfig

logger = get_logger(__name__)


def handle(args: argparse.Namespace) -> int:
    generated = sample_repository.load(args.samples_a)
    reference = sample_repository.load(args.samples_b, expected_dim=generated.dim)
    cfg = EvalConfig(wd_subsample=args.subsample, mmd_bandwidth_mode=args.bandwidth_mode)
    result = evaluate_samples(generated, reference, cfg, k=args.k, seed=args.seed)

    payload = result.model_dump(mode="json")
    run_log = args.run_log
    if run_log is None and not args.no_run_log and generated.meta.source == SampleSource.GENERATED:
        run_log = args.samples_a.parent / "run_log.csv"
    if run_log is not None:
        # explicit --run-log on a file without provenance raises MetricError
        record = record_from_samples(result, generated.meta, args.run_id or args.samples_a.stem)
        run_log_repository.append(run_log, [record])
        payload["run_log"] = str(run_log)
    else:
        logger.debug("No run-log row written", extra={"samples": str(args.samples_a)})

    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(result.model_dump_json(indent=2), encoding="utf-8")
    emit(payload)
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="1WD, MMD and brightness KS between two sample files")
    parser.add_argument("samples_a", type=Path, help="Generated samples (KS is computed on these)")
    parser.add_argument("samples_b", type=Path, help="Reference samples")
    parser.add_argument("--subsample", type=int, default=1000, help="1WD subsample size")
    parser.add_argument("--seed", type=int, default=0, help="1WD subsample seed")
    parser.add_argument("--bandwidth-mode", choices=["sqrt_n", "fourth_root_n"], default="sqrt_n")
    parser.add_argument("--k", type=float, default=2.0, help="Brightness range [-k, k]")
    parser.add_argument("--out", type=Path, help="Also write the result as JSON")
    parser.add_argument("--run-log", type=Path, help="Run log to append the metric row to")
    parser.add_argument("--run-id", help="run_id column of the appended row (default: file stem)")
    parser.add_argument("--no-run-log", action="store_true", help="Do not append a run-log row")
    bind(parser, handle, "eval")
