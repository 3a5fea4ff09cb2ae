"""
``sample``: generate points from a checkpoint.
"""
import argparse
from pathlib import Path
from typing import Iterable, Optional, Tuple

from src.app.commands.common import bind, emit, parse_int_list
from src.app.exceptions import EXIT_OK, CheckpointError
from src.app.repository.checkpoint_repository import checkpoint_repository
from src.app.repository.sample_repository import sample_repository
from src.app.services.config_service import build_config
from src.app.services.cylinder import rescale_generated
from src.app.services.sampler import generate
from src.app.services.schedule import build_tables, schedule_hash
from src.models.batch import SampleBatch
from src.schemas.config import RunConfig


def load_model(path: Path):
    """
    Parameters, run config and tables of a checkpoint.

    Raises:
        CheckpointError: If the stored config no longer reproduces the stored schedule
    """
    params, header = checkpoint_repository.load(path)
    cfg: RunConfig = build_config(header.run_config)
    tables = build_tables(cfg.schedule, sigma0=cfg.model.sigma0)
    if schedule_hash(tables) != header.schedule_hash:
        raise CheckpointError(f"{path}: schedule rebuilt from the stored config does not match its hash")
    return params, header, cfg, tables


def sample_checkpoint(path: Path, count: Optional[int] = None, seed: Optional[int] = None,
                      snapshot_steps: Iterable[int] = ()) -> Tuple[SampleBatch, RunConfig]:
    """Generate from a checkpoint and map the points back to data space."""
    params, header, cfg, tables = load_model(path)
    update = {}
    if count is not None:
        update["n_samples"] = count
    if seed is not None:
        update["seed"] = seed
    sampler_cfg = cfg.sampler.model_copy(update=update)

    batch = generate(params, tables, cfg.xi_spec(), sampler_cfg, snapshot_steps=snapshot_steps,
                     config_hash=header.config_hash, step=header.step)
    rho = cfg.scaling_rho
    out = SampleBatch(
        data=rescale_generated(batch.data, rho),
        meta=batch.meta.model_copy(update={"scaling_rho": rho, "sigma_c_sq": cfg.sigma_c_sq}),
        snapshots={s: rescale_generated(x, rho) for s, x in batch.snapshots.items()},
    )
    return out, cfg


def handle(args: argparse.Namespace) -> int:
    snapshot_steps = parse_int_list(args.snapshots) if args.snapshots else []
    batch, _ = sample_checkpoint(args.checkpoint, args.count, args.seed, snapshot_steps)
    out = sample_repository.save(args.out, batch)

    written = [str(out)]
    for s, data in sorted(batch.snapshots.items()):
        snap = SampleBatch(data=data, meta=batch.meta.model_copy(update={"rows": data.shape[0]}))
        written.append(str(sample_repository.save(out.with_name(f"{out.stem}_t{s}.csv"), snap)))

    emit({
        "files": written,
        "rows": len(batch),
        "divergence_count": batch.meta.divergence_count,
        "saturated_count": batch.meta.saturated_count,
    })
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("sample", help="Generate samples from a checkpoint")
    parser.add_argument("checkpoint", type=Path)
    parser.add_argument("--out", type=Path, required=True, help="Output CSV")
    parser.add_argument("--count", type=int, help="Number of chains (default: sampler.n_samples of the run)")
    parser.add_argument("--seed", type=int, help="Sampler seed (default: sampler.seed of the run)")
    parser.add_argument("--snapshots", help="Comma-separated timesteps whose states are also written")
    bind(parser, handle, "sample")
