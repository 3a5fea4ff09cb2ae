"""
``gen-data``: Cylinder train / test files for a list of seeds.
"""
import argparse
from pathlib import Path
from typing import List, Optional

from src.app.commands.common import add_config_arguments, bind, emit, parse_int_list, run_config
from src.app.exceptions import EXIT_OK
from src.app.logging_config import get_logger
from src.app.repository.sample_repository import dataset_path, sample_repository
from src.app.services.config_service import config_hash
from src.app.services.cylinder import SPLIT_STREAMS, cylinder_dataset
from src.schemas.config import RunConfig
from src.settings import settings

logger = get_logger(__name__)


def generate_datasets(cfg: RunConfig, seeds: List[int], out_dir: Optional[Path] = None) -> List[Path]:
    """Write one train and one test file per seed; returns the written paths."""
    out_dir = Path(out_dir) if out_dir is not None else Path(settings.DATA_DIR)
    cfg_hash = config_hash(cfg)
    written = []
    for seed in seeds:
        dataset_cfg = cfg.dataset.model_copy(update={"seed": seed})
        for split in SPLIT_STREAMS:
            batch = cylinder_dataset(dataset_cfg, config_hash=cfg_hash, split=split)
            written.append(sample_repository.save(dataset_path(dataset_cfg.dim, seed, split, out_dir), batch))
    logger.info(
        "Datasets generated",
        extra={"dim": cfg.dataset.dim, "seeds": seeds, "files": len(written), "out_dir": str(out_dir)},
    )
    return written


def ensure_datasets(cfg: RunConfig, data_dir: Optional[Path] = None) -> None:
    """Generate the dataset pair for ``cfg.dataset.seed`` unless both files exist."""
    paths = [dataset_path(cfg.dataset.dim, cfg.dataset.seed, split, data_dir) for split in SPLIT_STREAMS]
    if not all(p.exists() for p in paths):
        generate_datasets(cfg, [cfg.dataset.seed], data_dir)


def handle(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    seeds = parse_int_list(args.seeds) if args.seeds else cfg.seeds
    paths = generate_datasets(cfg, seeds, args.out_dir)
    emit({"files": [str(p) for p in paths]})
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-data", help="Generate Cylinder train/test CSV files")
    add_config_arguments(parser)
    parser.add_argument("--seeds", help="Comma-separated seeds (default: the profile's seeds)")
    parser.add_argument("--out-dir", type=Path, help="Output directory (default: DATA_DIR)")
    bind(parser, handle, "gen-data")
