"""
Plain DDPM written out from the beta schedule alone.

The main pipeline with q(xi) = DeltaZero and sigma0 = 1 (and offset noise
with sigma_c^2 = 0) must reproduce these pairs, losses and samples bit for
bit when both consume the same random stream.
"""
from typing import Callable, Tuple

import numpy as np

from src.app.services.denoiser import forward, init_params
from src.app.services.loss import batch_loss, make_training_pairs
from src.app.services.sampler import generate
from src.app.services.schedule import build_balanced_gamma, build_log_linear_schedule, derive_alpha_tables
from src.models.variant import ModelVariant, Prediction, XiKind
from src.schemas.config import SamplerConfig, XiSpec
from src.schemas.metrics import CheckStatus, VerifyReport

Predict = Callable[[np.ndarray, int], np.ndarray]


def ddpm_pairs(x0: np.ndarray, betas: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x_t, eps, t) with t ~ U{1..T}, betas indexed 1..T (betas[0] = 0)."""
    T = betas.shape[0] - 1
    alpha_bars = np.cumprod(1.0 - betas)
    B, n = x0.shape
    t = rng.integers(1, T + 1, size=B)
    eps = rng.standard_normal((B, n))
    ab = alpha_bars[t]
    x_t = np.sqrt(ab)[:, None] * x0 + np.sqrt(1.0 - ab)[:, None] * eps
    return x_t, eps, t


def ddpm_loss(target: np.ndarray, pred: np.ndarray) -> float:
    residual = target.astype(np.float64) - pred.astype(np.float64)
    return float(np.mean(np.sum(residual * residual, axis=1)))


def ddpm_sample(predict: Predict, betas: np.ndarray, n: int, count: int, rng: np.random.Generator,
                lo: float = -10.0, hi: float = 10.0) -> np.ndarray:
    T = betas.shape[0] - 1
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    x = rng.standard_normal((count, n))
    for t in range(T, 0, -1):
        z = rng.standard_normal((count, n))
        eps = np.asarray(predict(x, t), dtype=np.float64)
        a, ab = float(alphas[t]), float(alpha_bars[t])
        c1 = 1.0 / np.sqrt(a)
        c2 = (1.0 - a) / (np.sqrt(1.0 - ab) * np.sqrt(a))
        x = np.clip(c1 * x - c2 * eps + np.sqrt(betas[t]) * z, lo, hi)
    return x


def _mismatch(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        return float("inf")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def verify_ddpm_reduction(seed: int = 0, n: int = 2, pairs: int = 1000, samples: int = 100,
                          T: int = 200, name: str = "ddpm_reduction") -> VerifyReport:
    """
    Pairs, loss and samples of the base, offset(sigma_c^2 = 0) and
    proposed(DeltaZero) paths against the reference. Any nonzero gap fails.
    """
    bs = build_log_linear_schedule(T, 0.01, 10.0)
    plain = derive_alpha_tables(bs)
    balanced = build_balanced_gamma(plain)
    params = init_params(n, embed_dim=4, seed=seed, hidden_dims=(8, 8), T=T, dtype=np.float64)
    x0 = np.random.default_rng([seed, 1]).standard_normal((pairs, n))

    ref_x_t, ref_eps, ref_t = ddpm_pairs(x0, bs.beta, np.random.default_rng(seed))
    ref_loss = ddpm_loss(ref_eps, forward(params, ref_x_t, ref_t))
    ref_samples = ddpm_sample(lambda x, t: forward(params, x, t), bs.beta, n, samples, np.random.default_rng(seed))

    paths = (
        ("base", ModelVariant.BASE, plain, XiSpec(kind=XiKind.DELTA_ZERO, dim=n)),
        ("offset", ModelVariant.OFFSET, plain, XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=0.0, dim=n)),
        ("proposed", ModelVariant.PROPOSED, balanced, XiSpec(kind=XiKind.DELTA_ZERO, dim=n)),
    )
    gaps = {}
    for label, variant, tables, spec in paths:
        made = make_training_pairs(x0, tables, spec, variant, Prediction.EPS, rng=np.random.default_rng(seed))
        loss = batch_loss(made, forward(params, made.x_t, made.t))
        gap = max(
            _mismatch(made.x_t, ref_x_t),
            _mismatch(made.target, ref_eps),
            _mismatch(made.t.astype(np.float64), ref_t.astype(np.float64)),
            abs(loss - ref_loss),
        )
        cfg = SamplerConfig(variant=variant, prediction=Prediction.EPS, n_samples=samples, seed=seed)
        generated = generate(params, tables, spec, cfg)
        gaps[label] = max(gap, _mismatch(generated.data, ref_samples))

    worst = max(gaps.values())
    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if worst == 0.0 else CheckStatus.FAIL,
        error=worst,
        tolerance=0.0,
        samples=pairs + samples,
        seed=seed,
        detail=", ".join(f"{k} {v:.1e}" for k, v in gaps.items()),
    )
