"""
Two-sample distances and brightness statistics.
"""
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import kstest

from src.app.exceptions import MetricError
from src.app.logging_config import get_logger
from src.models.batch import SampleBatch
from src.schemas.metrics import HistogramResult

logger = get_logger(__name__)

MMD_BLOCK_ROWS = 1024

Samples = Union[SampleBatch, np.ndarray]


def _matrix(samples: Samples, name: str) -> np.ndarray:
    data = samples.data if isinstance(samples, SampleBatch) else np.asarray(samples, dtype=np.float64)
    data = np.atleast_2d(data)
    if data.shape[0] == 0:
        raise MetricError(f"{name} is empty")
    return data


def _pair(A: Samples, B: Samples):
    a, b = _matrix(A, "first sample set"), _matrix(B, "second sample set")
    if a.shape[1] != b.shape[1]:
        raise MetricError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def wasserstein1(A: Samples, B: Samples, subsample: int = 1000, seed: int = 0) -> float:
    """
    Exact 1-Wasserstein distance between equal-size seeded subsamples.

    Each set is subsampled without replacement to min(subsample, |A|, |B|)
    rows with a fresh generator seeded by ``seed``; the balanced assignment
    under Euclidean cost is solved exactly and the mean matched distance is
    returned.
    """
    a, b = _pair(A, B)
    m = min(subsample, a.shape[0], b.shape[0])
    # same seed for both sets; identical inputs give identical subsamples
    a = a[np.random.default_rng(seed).choice(a.shape[0], size=m, replace=False)]
    b = b[np.random.default_rng(seed).choice(b.shape[0], size=m, replace=False)]

    cost = cdist(a, b, metric="euclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _kernel_sum(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    total = 0.0
    scale = -0.5 / bandwidth ** 2
    for start in range(0, x.shape[0], MMD_BLOCK_ROWS):
        block = x[start:start + MMD_BLOCK_ROWS]
        total += float(np.sum(np.exp(scale * cdist(block, y, metric="sqeuclidean"))))
    return total


def mmd(A: Samples, B: Samples, bandwidth: float) -> float:
    """
    Biased (V-statistic) MMD with kernel exp(-||x - y||^2 / (2 h^2)).

    Returns sqrt(max(0, MMD^2)).
    """
    if not bandwidth > 0:
        raise MetricError(f"bandwidth must be positive, got {bandwidth}")
    a, b = _pair(A, B)
    m, k = a.shape[0], b.shape[0]
    mmd_sq = (
        _kernel_sum(a, a, bandwidth) / (m * m)
        + _kernel_sum(b, b, bandwidth) / (k * k)
        - 2.0 * _kernel_sum(a, b, bandwidth) / (m * k)
    )
    # cancellation can leave a tiny negative MMD^2
    return float(np.sqrt(max(0.0, mmd_sq)))


def mmd_bandwidth(n: int, mode: str = "sqrt_n") -> float:
    """Kernel bandwidth h for dimension n: sqrt(n), or n^(1/4) so that h^2 = sqrt(n)."""
    if mode == "sqrt_n":
        return float(np.sqrt(n))
    if mode == "fourth_root_n":
        return float(n ** 0.25)
    raise MetricError(f"unknown bandwidth mode {mode!r}")


def ks_vs_uniform(brightness: np.ndarray, k: float) -> float:
    """Kolmogorov-Smirnov statistic of ``brightness`` against U(-k, k)."""
    brightness = np.asarray(brightness, dtype=np.float64).ravel()
    if brightness.size == 0:
        raise MetricError("brightness vector is empty")
    # scipy parameterizes uniform by (loc, scale)
    return float(kstest(brightness, "uniform", args=(-k, 2.0 * k)).statistic)


def brightness_histogram(brightness: np.ndarray, k: float, bins: int = 10) -> HistogramResult:
    """Counts over ``bins`` equal bins on [-k, k] plus out-of-range tallies."""
    brightness = np.asarray(brightness, dtype=np.float64).ravel()
    edges = np.linspace(-k, k, bins + 1)
    counts, _ = np.histogram(brightness, bins=edges)
    return HistogramResult(
        edges=edges.tolist(),
        counts=counts.astype(int).tolist(),
        below=int(np.sum(brightness < -k)),
        above=int(np.sum(brightness > k)),
    )
