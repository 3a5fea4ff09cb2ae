"""
Training loop with periodic evaluation and checkpointing.
"""
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
from tqdm import tqdm

from src.app.exceptions import ConfigError, NumericFailureError
from src.app.logging_config import get_logger
from src.app.repository.checkpoint_repository import checkpoint_repository
from src.app.repository.run_log_repository import run_log_repository
from src.app.repository.sample_repository import sample_repository
from src.app.services.config_service import config_hash as compute_config_hash
from src.app.services.cylinder import scale_for_training
from src.app.services.denoiser import adam_step, init_params, loss_and_grad
from src.app.services.evaluation import evaluate_checkpoint
from src.app.services.loss import make_training_pairs
from src.app.services.schedule import build_tables, schedule_hash
from src.models.batch import SampleBatch
from src.models.denoiser import AdamState, DenoiserParams
from src.models.schedule import ScheduleTables
from src.schemas.checkpoint import CheckpointHeader
from src.schemas.config import RunConfig
from src.schemas.metrics import MetricRecord

logger = get_logger(__name__)

RUN_LOG_NAME = "run_log.csv"
CHECKPOINT_NAME = "final.ckpt"
FINAL_SAMPLES_NAME = "samples_final.csv"
CONFIG_NAME = "config.json"


@dataclass(eq=False)
class TrainResult:
    """What a finished run leaves behind."""
    run_id: str
    config_hash: str
    params: DenoiserParams
    state: AdamState
    tables: ScheduleTables
    records: List[MetricRecord] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    skipped_steps: int = 0
    final_samples: Optional[SampleBatch] = None
    run_dir: Optional[Path] = None

    @property
    def checkpoint_path(self) -> Optional[Path]:
        return None if self.run_dir is None else self.run_dir / CHECKPOINT_NAME


@dataclass(frozen=True)
class RunStreams:
    """Independent generators spawned from the master seed."""
    init_seed: int
    batches: np.random.Generator
    pairs: np.random.Generator

    @classmethod
    def from_master(cls, master_seed: int) -> "RunStreams":
        init_ss, batch_ss, pair_ss = np.random.SeedSequence(master_seed).spawn(3)
        return cls(
            init_seed=int(init_ss.generate_state(1)[0]),
            batches=np.random.default_rng(batch_ss),
            pairs=np.random.default_rng(pair_ss),
        )


def run_name(cfg: RunConfig, cfg_hash: str) -> str:
    """Readable run id: variant, parameterization, dimension, seed and config hash."""
    return (
        f"{cfg.model.variant.value}-{cfg.model.prediction.value}-n{cfg.dataset.dim}"
        f"-seed{cfg.master_seed}-{cfg_hash[:8]}"
    )


def eval_steps(max_steps: int, every_steps: int) -> List[int]:
    """Step 0, every multiple of ``every_steps``, and the last step."""
    steps = set(range(0, max_steps + 1, every_steps))
    steps.add(max_steps)
    return sorted(steps)


def checkpoint_header(cfg: RunConfig, cfg_hash: str, params: DenoiserParams, tables: ScheduleTables,
                      step: int) -> CheckpointHeader:
    """Header describing ``params`` trained under ``cfg`` up to ``step``."""
    return CheckpointHeader(
        layer_dims=list(params.layer_dims),
        embed_dim=params.embed_dim,
        T=params.T,
        variant=cfg.model.variant,
        prediction=cfg.model.prediction,
        schedule_hash=schedule_hash(tables),
        config_hash=cfg_hash,
        step=step,
        master_seed=cfg.master_seed,
        run_config=cfg.model_dump(mode="json"),
    )


def train(cfg: RunConfig, train_data: SampleBatch, test_data: SampleBatch,
          run_dir: Optional[Path] = None, run_id: Optional[str] = None,
          progress: bool = True,
          on_record: Optional[Callable[[MetricRecord], None]] = None) -> TrainResult:
    """
    Train one denoiser and evaluate it on a fixed step grid.

    Each step draws ``batch_size`` rows of the training set with
    replacement, scales them by 1/rho, builds pairs for the configured
    variant and takes one clipped Adam step. Steps whose loss or gradient
    is not finite are skipped; ``max_consecutive_skips`` skips in a row
    abort the run.

    Args:
        cfg: Validated run configuration
        train_data: Training rows in data space
        test_data: Held-out rows metrics are computed against
        run_dir: When given, the run log, final checkpoint, final samples and config go here
        run_id: Identifier for log rows; derived from the config when omitted
        progress: Show a progress bar on interactive terminals
        on_record: Called with every metric row as it is produced

    Returns:
        TrainResult

    Raises:
        ConfigError: Data dimension differs from the config
        NumericFailureError: Too many consecutive skipped steps
    """
    n = cfg.dataset.dim
    if train_data.dim != n or test_data.dim != n:
        raise ConfigError(f"datasets have dims {train_data.dim}/{test_data.dim}, config says {n}")

    cfg_hash = compute_config_hash(cfg)
    run_id = run_id or run_name(cfg, cfg_hash)
    tables = build_tables(cfg.schedule, sigma0=cfg.model.sigma0)
    spec = cfg.xi_spec()
    streams = RunStreams.from_master(cfg.master_seed)
    opt = cfg.optimizer

    params = init_params(
        n, embed_dim=cfg.model.embed_dim, seed=streams.init_seed,
        hidden_dims=cfg.model.hidden_dims, T=tables.T,
    )
    state = AdamState.zeros_like(params, lr=opt.lr, beta1=opt.beta1, beta2=opt.beta2, eps=opt.eps)

    run_log = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / CONFIG_NAME).write_text(cfg.model_dump_json(indent=2), encoding="utf-8")
        run_log = run_dir / RUN_LOG_NAME
        if run_log.exists():
            run_log.unlink()

    result = TrainResult(run_id=run_id, config_hash=cfg_hash, params=params, state=state,
                         tables=tables, run_dir=run_dir)
    checkpoints = set(eval_steps(opt.max_steps, cfg.eval.every_steps))

    def evaluate(step: int) -> None:
        record, generated = evaluate_checkpoint(result.params, tables, cfg, test_data, step, run_id, cfg_hash)
        result.records.append(record)
        result.final_samples = generated
        if run_log is not None:
            run_log_repository.append(run_log, [record])
        if on_record is not None:
            on_record(record)

    logger.info(
        "Training started",
        extra={
            "run_id": run_id,
            "config_hash": cfg_hash,
            "variant": cfg.model.variant.value,
            "prediction": cfg.model.prediction.value,
            "n": n,
            "max_steps": opt.max_steps,
            "parameter_count": params.parameter_count(),
        },
    )
    evaluate(0)

    rows = train_data.data
    consecutive = 0
    bar = tqdm(
        range(1, opt.max_steps + 1),
        desc=run_id,
        disable=not progress or not sys.stderr.isatty(),
        leave=False,
    )
    for step in bar:
        idx = streams.batches.integers(0, rows.shape[0], size=opt.batch_size)
        x0 = scale_for_training(rows[idx], cfg.scaling_rho)
        pairs = make_training_pairs(
            x0, tables, spec, cfg.model.variant, cfg.model.prediction,
            rng=streams.pairs, weighting=cfg.model.weighting,
        )
        loss, grads = loss_and_grad(result.params, pairs)

        skipped = not np.isfinite(loss)
        if skipped:
            result.state.skipped_steps += 1
            logger.warning("Non-finite loss, optimizer step skipped", extra={"run_id": run_id, "step": step})
        else:
            before = result.state.skipped_steps
            result.params, result.state, _ = adam_step(result.params, grads, result.state, clip_norm=opt.clip_norm)
            skipped = result.state.skipped_steps > before

        if skipped:
            consecutive += 1
            if consecutive >= opt.max_consecutive_skips:
                raise NumericFailureError(
                    f"{consecutive} consecutive optimizer steps skipped at step {step} of run {run_id}"
                )
        else:
            consecutive = 0
            result.losses.append(float(loss))
            if step % 100 == 0:
                bar.set_postfix(loss=f"{loss:.4f}")

        if step in checkpoints:
            evaluate(step)

    result.skipped_steps = result.state.skipped_steps
    if run_dir is not None:
        checkpoint_repository.save(run_dir / CHECKPOINT_NAME, result.params,
                                   checkpoint_header(cfg, cfg_hash, result.params, tables, opt.max_steps))
        if result.final_samples is not None:
            sample_repository.save(run_dir / FINAL_SAMPLES_NAME, result.final_samples)

    final = result.records[-1]
    logger.info(
        "Training finished",
        extra={
            "run_id": run_id,
            "steps": opt.max_steps,
            "skipped_steps": result.skipped_steps,
            "final_wd1": final.wd1,
            "final_mmd": final.mmd,
            "final_ks": final.ks,
        },
    )
    return result
