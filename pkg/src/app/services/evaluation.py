"""
Evaluation of generated samples against a held-out set.
"""
from typing import Tuple, Union

import numpy as np

from src.app.exceptions import MetricError
from src.app.logging_config import get_logger
from src.app.services.cylinder import avg_brightness, rescale_generated
from src.app.services.metrics import ks_vs_uniform, mmd, mmd_bandwidth, wasserstein1
from src.app.services.sampler import generate
from src.models.batch import SampleBatch
from src.models.denoiser import DenoiserParams
from src.models.schedule import ScheduleTables
from src.models.variant import SampleSource
from src.schemas.config import EvalConfig, RunConfig
from src.schemas.metrics import EvalResult, MetricRecord
from src.schemas.sample import SampleMeta

logger = get_logger(__name__)

EVAL_STREAM = 3

Samples = Union[SampleBatch, np.ndarray]


def _data(samples: Samples) -> np.ndarray:
    return samples.data if isinstance(samples, SampleBatch) else np.atleast_2d(np.asarray(samples, dtype=np.float64))


def evaluate_samples(generated: Samples, reference: Samples, cfg: EvalConfig,
                     k: float = 2.0, seed: int = 0) -> EvalResult:
    """
    1WD and MMD between the two sets, and the KS statistic of the first
    set's brightness against U(-k, k).

    Raises:
        MetricError: Empty input or dimension mismatch
    """
    a, b = _data(generated), _data(reference)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise MetricError("cannot evaluate an empty sample set")
    if a.shape[1] != b.shape[1]:
        raise MetricError(f"dimension mismatch between sample sets: {a.shape[1]} vs {b.shape[1]}")

    n = a.shape[1]
    bandwidth = mmd_bandwidth(n, cfg.mmd_bandwidth_mode)
    result = EvalResult(
        wd1=wasserstein1(a, b, subsample=cfg.wd_subsample, seed=seed),
        mmd=mmd(a, b, bandwidth),
        ks=ks_vs_uniform(avg_brightness(a), k),
        mmd_bandwidth=bandwidth,
        wd_subsample=min(cfg.wd_subsample, a.shape[0], b.shape[0]),
        rows_a=a.shape[0],
        rows_b=b.shape[0],
        dim=n,
    )
    logger.debug("Samples evaluated", extra=result.model_dump())
    return result


def eval_seed(master_seed: int, step: int) -> int:
    """Sampler seed for the evaluation at ``step``."""
    return int(np.random.SeedSequence([master_seed, EVAL_STREAM, step]).generate_state(1)[0])


def evaluate_checkpoint(params: DenoiserParams, tables: ScheduleTables, cfg: RunConfig,
                        reference: SampleBatch, step: int, run_id: str,
                        config_hash: str) -> Tuple[MetricRecord, SampleBatch]:
    """
    Generate ``eval.n_generate`` samples, map them back through rho and
    score them against ``reference``.

    A generation in which every chain diverged is recorded with NaN metrics.

    Returns:
        (metric row, generated samples in data space)
    """
    seed = eval_seed(cfg.master_seed, step)
    sampler_cfg = cfg.sampler.model_copy(update={"n_samples": cfg.eval.n_generate, "seed": seed})
    batch = generate(params, tables, cfg.xi_spec(), sampler_cfg, config_hash=config_hash, step=step)
    data = rescale_generated(batch.data, cfg.scaling_rho)
    generated = SampleBatch(
        data=data,
        meta=batch.meta.model_copy(update={"scaling_rho": cfg.scaling_rho, "sigma_c_sq": cfg.sigma_c_sq}),
    )

    if len(generated) == 0:
        logger.warning(
            "Every sampling chain diverged, metrics recorded as NaN",
            extra={"run_id": run_id, "step": step},
        )
        wd1 = mmd_value = ks = float("nan")
        wd_subsample = 0
    else:
        result = evaluate_samples(generated, reference, cfg.eval, k=cfg.dataset.k, seed=cfg.master_seed)
        wd1, mmd_value, ks, wd_subsample = result.wd1, result.mmd, result.ks, result.wd_subsample

    record = MetricRecord(
        run_id=run_id,
        config_hash=config_hash,
        step=step,
        variant=cfg.model.variant,
        prediction=cfg.model.prediction,
        sigma_c_sq=cfg.sigma_c_sq,
        n=cfg.dataset.dim,
        seed=cfg.master_seed,
        rho=cfg.scaling_rho,
        wd1=wd1,
        mmd=mmd_value,
        ks=ks,
        divergence_count=batch.meta.divergence_count,
        saturated_count=batch.meta.saturated_count,
        n_generated=cfg.eval.n_generate,
        wd_subsample=wd_subsample,
    )
    logger.info(
        "Checkpoint evaluated",
        extra={"run_id": run_id, "step": step, "wd1": wd1, "mmd": mmd_value, "ks": ks,
               "divergence_count": record.divergence_count},
    )
    return record, generated


def record_from_samples(result: EvalResult, meta: SampleMeta, run_id: str) -> MetricRecord:
    """
    Run-log row for an ``eval`` of a generated sample file.

    Raises:
        MetricError: The file carries no generator provenance
    """
    if meta.source != SampleSource.GENERATED or meta.variant is None or meta.prediction is None:
        raise MetricError(f"run-log rows need generated samples with provenance, got source {meta.source.value}")
    return MetricRecord(
        run_id=run_id,
        config_hash=meta.config_hash,
        step=meta.step or 0,
        variant=meta.variant,
        prediction=meta.prediction,
        sigma_c_sq=meta.sigma_c_sq,
        n=meta.dim,
        seed=meta.seed,
        rho=meta.scaling_rho,
        wd1=result.wd1,
        mmd=result.mmd,
        ks=result.ks,
        divergence_count=meta.divergence_count,
        saturated_count=meta.saturated_count,
        n_generated=meta.rows + meta.divergence_count,
        wd_subsample=result.wd_subsample,
    )
