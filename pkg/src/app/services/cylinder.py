"""
Cylinder dataset generation and data scaling.
"""
from typing import Optional

import numpy as np

from src.app.exceptions import ConfigError, MetricError
from src.app.logging_config import get_logger
from src.models.batch import SampleBatch
from src.models.variant import SampleSource
from src.schemas.config import CylinderConfig
from src.schemas.sample import SampleMeta

logger = get_logger(__name__)

SPLIT_STREAMS = {"train": 0, "test": 1}


def cylinder_dataset(cfg: CylinderConfig, config_hash: str = "", split: Optional[str] = None) -> SampleBatch:
    """
    Points u_h * k * 1_n + u_r * x_ortho in R^n.

    x_ortho is a Gaussian vector with its 1_n component projected out and
    normalized to unit length; u_r ~ U(0, r * sqrt(n)) and u_h ~ U(-1, 1).
    The mean of every row is exactly u_h * k, so brightness is uniform on
    [-k, k]. The heights u_h * k are kept on the returned batch.

    ``split`` selects an independent stream per split, so the train and test
    sets of one seed never share draws.

    Raises:
        ConfigError: If n < 2
    """
    n = cfg.dim
    if n < 2:
        raise ConfigError(f"the Cylinder dataset needs n >= 2, got {n}")

    rng = np.random.default_rng(cfg.seed if split is None else [cfg.seed, SPLIT_STREAMS[split]])
    ones = np.ones(n, dtype=np.float64)
    adjusted_r = cfg.r * np.sqrt(n)

    ortho = rng.standard_normal((cfg.size, n))
    # remove the 1_n component; rows then have zero mean
    ortho = ortho - (ortho @ ones)[:, None] / n * ones
    ortho = ortho / np.linalg.norm(ortho, axis=1)[:, None]
    ortho = ortho * (rng.uniform(0.0, 1.0, cfg.size) * adjusted_r)[:, None]

    heights = (rng.uniform(0.0, 1.0, cfg.size) * 2.0 - 1.0) * cfg.k
    data = heights[:, None] * ones + ortho

    logger.debug(
        "Cylinder dataset generated",
        extra={"size": cfg.size, "dim": n, "seed": cfg.seed, "split": split},
    )
    meta = SampleMeta(
        source=SampleSource.DATASET,
        rows=cfg.size,
        dim=n,
        seed=cfg.seed,
        config_hash=config_hash,
        split=split,
    )
    return SampleBatch(data=data, meta=meta, heights=heights)


def avg_brightness(data) -> np.ndarray:
    """Per-row mean of the components."""
    data = data.data if isinstance(data, SampleBatch) else np.asarray(data, dtype=np.float64)
    if data.size == 0:
        raise MetricError("brightness of an empty batch")
    return np.mean(np.atleast_2d(data), axis=1)


def scale_for_training(data: np.ndarray, rho: float) -> np.ndarray:
    """x0 / rho, the representation the network is trained on."""
    return np.asarray(data, dtype=np.float64) / rho


def rescale_generated(data: np.ndarray, rho: float) -> np.ndarray:
    """Undo ``scale_for_training`` on generated samples."""
    return np.asarray(data, dtype=np.float64) * rho
