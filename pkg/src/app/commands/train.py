"""
``train``: one training run with periodic evaluation.
"""
import argparse
from pathlib import Path

from src.app.commands.common import add_config_arguments, bind, emit, run_config
from src.app.exceptions import EXIT_OK
from src.app.repository.sample_repository import dataset_path, sample_repository
from src.app.services.config_service import config_hash
from src.app.services.training import run_name, train
from src.settings import settings


def handle(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    n, seed = cfg.dataset.dim, cfg.dataset.seed
    train_path = args.train or dataset_path(n, seed, "train", args.data_dir)
    test_path = args.test or dataset_path(n, seed, "test", args.data_dir)
    train_data = sample_repository.load(train_path, expected_dim=n)
    test_data = sample_repository.load(test_path, expected_dim=n)

    run_id = run_name(cfg, config_hash(cfg))
    run_dir = args.run_dir or Path(settings.RUNS_DIR) / run_id
    result = train(cfg, train_data, test_data, run_dir=run_dir, run_id=run_id, progress=not args.no_progress)

    emit({
        "run_id": result.run_id,
        "config_hash": result.config_hash,
        "checkpoint": str(result.checkpoint_path),
        "skipped_steps": result.skipped_steps,
        "final": result.records[-1].model_dump(mode="json"),
    })
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a denoiser and log metrics")
    add_config_arguments(parser)
    parser.add_argument("--train", type=Path, help="Training CSV (default: the dataset path for the config seed)")
    parser.add_argument("--test", type=Path, help="Test CSV (default: the dataset path for the config seed)")
    parser.add_argument("--data-dir", type=Path, help="Dataset directory (default: DATA_DIR)")
    parser.add_argument("--run-dir", type=Path, help="Output directory (default: RUNS_DIR/<run id>)")
    parser.add_argument("--no-progress", action="store_true", help="Disable the progress bar")
    bind(parser, handle, "train")
