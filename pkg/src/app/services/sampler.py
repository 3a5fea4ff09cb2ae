"""
Ancestral sampling for all model variants.
"""
from typing import Callable, Dict, Iterable, Optional, Union

import numpy as np

from src.app.exceptions import UnsupportedCombinationError
from src.app.logging_config import get_logger
from src.app.services.denoiser import forward
from src.app.services.process import mu_from_eps, mu_from_v, reverse_init
from src.models.batch import SampleBatch
from src.models.denoiser import DenoiserParams
from src.models.schedule import ScheduleTables
from src.models.variant import ModelVariant, Prediction, SampleSource
from src.schemas.config import SamplerConfig, XiSpec
from src.schemas.sample import SampleMeta

logger = get_logger(__name__)

Predictor = Callable[[np.ndarray, int], np.ndarray]


def as_predictor(model: Union[DenoiserParams, Predictor]) -> Predictor:
    """Wrap network parameters as a (x, t) -> prediction callable."""
    if isinstance(model, DenoiserParams):
        return lambda x, t: forward(model, x, t)
    return model


def generate(model: Union[DenoiserParams, Predictor], tables: ScheduleTables, spec: XiSpec,
             cfg: SamplerConfig, snapshot_steps: Iterable[int] = (), config_hash: str = "",
             step: Optional[int] = None) -> SampleBatch:
    """
    Run the reverse chain from t = T down to 1 for ``cfg.n_samples`` chains.

    The proposed variant starts from x_T ~ N(xi, sigma0^2 I) with a fresh xi
    per chain; the other variants start from N(0, I). Every step adds
    sqrt(beta_t) noise, including t = 1, and clips to [clip_lo, clip_hi].
    Noise is drawn for every chain at every step so that streams stay
    aligned; chains that become non-finite are dropped and counted.

    Args:
        model: Network parameters or a prediction callable
        tables: Schedule tables matching the variant
        spec: q(xi) for the proposed initialization
        cfg: Sampler settings
        snapshot_steps: Timesteps s whose states x_s are recorded (0 is the output)
        config_hash: Carried into the sample metadata
        step: Optimizer step of the generating checkpoint

    Raises:
        UnsupportedCombinationError: zero_snr with epsilon prediction
    """
    if cfg.prediction == Prediction.EPS and (cfg.variant == ModelVariant.ZERO_SNR or tables.zero_snr):
        raise UnsupportedCombinationError("zero-SNR sampling requires v-prediction")

    predict = as_predictor(model)
    mean_fn = mu_from_v if cfg.prediction == Prediction.V else mu_from_eps
    rng = np.random.default_rng(cfg.seed)
    N, n = cfg.n_samples, spec.dim
    wanted = set(int(s) for s in snapshot_steps)
    snapshots: Dict[int, np.ndarray] = {}

    if cfg.variant == ModelVariant.PROPOSED:
        x, _ = reverse_init(spec, tables, rng, N)
    else:
        x = rng.standard_normal((N, n))
    if tables.T in wanted:
        snapshots[tables.T] = x.copy()

    alive = np.ones(N, dtype=bool)
    for t in range(tables.T, 0, -1):
        # full (N, n) draw every step, dropped chains included
        z = rng.standard_normal((N, n))
        if alive.any():
            current = x[alive]
            pred = np.asarray(predict(current, t), dtype=np.float64)
            with np.errstate(over="ignore", invalid="ignore"):
                mu = mean_fn(current, pred, t, tables)
                stepped = np.clip(mu + np.sqrt(tables.sigma_rev_sq[t]) * z[alive], cfg.clip_lo, cfg.clip_hi)
            # clip passes NaN through
            finite = np.all(np.isfinite(stepped), axis=1)
            x[alive] = stepped
            if not finite.all():
                idx = np.flatnonzero(alive)[~finite]
                alive[idx] = False
                logger.debug("Sampler chains diverged", extra={"t": t, "count": int(idx.size)})
        if t - 1 in wanted:
            snapshots[t - 1] = x[alive].copy()

    data = x[alive]
    divergence_count = int(N - alive.sum())
    on_boundary = np.any((data <= cfg.clip_lo) | (data >= cfg.clip_hi), axis=1)
    saturated_count = int(on_boundary.sum())

    logger.info(
        "Sampling complete",
        extra={
            "variant": cfg.variant.value,
            "prediction": cfg.prediction.value,
            "n_samples": N,
            "divergence_count": divergence_count,
            "saturated_count": saturated_count,
        },
    )

    meta = SampleMeta(
        source=SampleSource.GENERATED,
        rows=int(data.shape[0]),
        dim=n,
        seed=cfg.seed,
        config_hash=config_hash,
        variant=cfg.variant,
        prediction=cfg.prediction,
        step=step,
        divergence_count=divergence_count,
        saturated_count=saturated_count,
    )
    return SampleBatch(data=data, meta=meta, snapshots=snapshots)
