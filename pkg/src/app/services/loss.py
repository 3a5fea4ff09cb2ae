"""
Training-pair construction and batch loss.

Random draws happen in a fixed order: timesteps (when not given), then the
Gaussian noise eps_0 of shape (B, n), then the B scalars of xi. Keeping the
order fixed lets a DeltaZero run replay a plain diffusion stream bit for bit.
"""
from typing import Optional, Tuple

import numpy as np

from src.app.exceptions import LossError, UnsupportedCombinationError
from src.app.logging_config import get_logger
from src.app.services.process import coef
from src.app.services.xi_noise import sample_xi_batch
from src.models.batch import TrainingPair
from src.models.schedule import ScheduleTables
from src.models.variant import LossWeighting, ModelVariant, Prediction
from src.schemas.config import XiSpec

logger = get_logger(__name__)

NU_TOLERANCE = 1e-9


def _prepare(x0, t, tables: ScheduleTables, rng: Optional[np.random.Generator]) -> Tuple[np.ndarray, np.ndarray]:
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    B = x0.shape[0]
    if t is None:
        if rng is None:
            raise LossError("rng is required when t is not given")
        t = rng.integers(1, tables.T + 1, size=B)
    t = tables.check_timestep(t)
    if t.ndim == 0:
        t = np.full(B, int(t), dtype=np.int64)
    if t.shape != (B,):
        raise LossError(f"t has shape {t.shape}, expected ({B},)")
    return x0, t


def _draw(shape, rng, eps, spec: XiSpec, xi) -> Tuple[np.ndarray, np.ndarray]:
    if eps is None:
        if rng is None:
            raise LossError("rng is required when eps is not given")
        eps = rng.standard_normal(shape)
    eps = np.asarray(eps, dtype=np.float64).reshape(shape)
    # draw order is t, eps, then xi; delta_zero consumes nothing from rng
    if xi is None:
        xi = sample_xi_batch(spec, rng, shape[0])
    xi = np.broadcast_to(np.asarray(xi, dtype=np.float64), shape)
    return eps, xi


def _weight(tables: ScheduleTables, t: np.ndarray, weighting: LossWeighting, column: np.ndarray) -> np.ndarray:
    if weighting == LossWeighting.SIMPLE:
        return np.ones(t.shape[0], dtype=np.float64)
    weight = column[t]
    if not np.all(np.isfinite(weight)):
        raise LossError("ELBO weight is not finite at a drawn timestep")
    return weight.astype(np.float64)


def make_eps_pair_proposed(x0, t, tables: ScheduleTables, spec: XiSpec,
                           rng: Optional[np.random.Generator] = None,
                           weighting: LossWeighting = LossWeighting.SIMPLE,
                           eps: Optional[np.ndarray] = None,
                           xi: Optional[np.ndarray] = None) -> TrainingPair:
    """
    Noise-prediction pair for the auxiliary-noise process.

    x_t = sqrt(ab) x0 + sqrt(1 - ab) (sigma0 eps0 + psi_t xi)
    target = sigma0 eps0 + phi_t xi
    """
    x0, t = _prepare(x0, t, tables, rng)
    eps, xi = _draw(x0.shape, rng, eps, spec, xi)
    alpha_bar = coef(tables.alpha_bar, t)
    added = tables.sigma0 * eps + coef(tables.psi, t) * xi
    x_t = np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * added
    target = tables.sigma0 * eps + coef(tables.phi, t) * xi
    return TrainingPair(
        x_t=x_t, target=target, t=t,
        weight=_weight(tables, t, weighting, tables.lambda_eps),
        added_noise=added,
    )


def make_eps_pair_offset(x0, t, tables: ScheduleTables, spec: XiSpec,
                         rng: Optional[np.random.Generator] = None,
                         weighting: LossWeighting = LossWeighting.SIMPLE,
                         eps: Optional[np.ndarray] = None,
                         xi: Optional[np.ndarray] = None) -> TrainingPair:
    """
    Offset-noise pair: eps_0 + eps_c enters x_t and the target with coefficient 1.

    Raises:
        UnsupportedCombinationError: If the tables use sigma0 != 1
    """
    if tables.sigma0 != 1.0:
        raise UnsupportedCombinationError("offset noise is defined for sigma0 = 1 only")
    x0, t = _prepare(x0, t, tables, rng)
    eps, eps_c = _draw(x0.shape, rng, eps, spec, xi)
    alpha_bar = coef(tables.alpha_bar, t)
    added = eps + eps_c
    x_t = np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * added
    return TrainingPair(
        x_t=x_t, target=added.copy(), t=t,
        weight=_weight(tables, t, weighting, tables.lambda_eps),
        added_noise=added,
    )


def make_v_pair(x0, t, tables: ScheduleTables, spec: XiSpec,
                rng: Optional[np.random.Generator] = None,
                weighting: LossWeighting = LossWeighting.SIMPLE,
                eps: Optional[np.ndarray] = None,
                xi: Optional[np.ndarray] = None,
                offset: bool = False) -> TrainingPair:
    """
    Velocity-prediction pair.

    target v_t = sqrt(ab) (sigma0 eps0 + psi_t xi) - sqrt(1 - ab) x0. With
    ``offset=True`` the noise term is eps0 + eps_c instead, which is the
    offset-noise baseline under v-prediction.

    Raises:
        LossError: If the tables have nu_t != 0 (gamma not balanced)
    """
    if tables.max_abs_nu() > NU_TOLERANCE:
        raise LossError(
            f"v-prediction needs nu_t = 0 (balanced gamma); max |nu_t| = {tables.max_abs_nu():.3e}"
        )
    if offset and tables.sigma0 != 1.0:
        raise UnsupportedCombinationError("offset noise is defined for sigma0 = 1 only")
    x0, t = _prepare(x0, t, tables, rng)
    eps, xi = _draw(x0.shape, rng, eps, spec, xi)
    alpha_bar = coef(tables.alpha_bar, t)
    if offset:
        added = eps + xi
    else:
        added = tables.sigma0 * eps + coef(tables.psi, t) * xi
    x_t = np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * added
    target = np.sqrt(alpha_bar) * added - np.sqrt(1.0 - alpha_bar) * x0
    return TrainingPair(
        x_t=x_t, target=target, t=t,
        weight=_weight(tables, t, weighting, tables.lambda_v),
        added_noise=added,
    )


def make_training_pairs(x0, tables: ScheduleTables, spec: XiSpec, variant: ModelVariant,
                        prediction: Prediction, rng: Optional[np.random.Generator] = None,
                        weighting: LossWeighting = LossWeighting.SIMPLE, t=None,
                        eps: Optional[np.ndarray] = None,
                        xi: Optional[np.ndarray] = None) -> TrainingPair:
    """
    Pairs for one (variant, prediction) combination.

    Raises:
        UnsupportedCombinationError: For zero_snr with epsilon prediction
    """
    kwargs = dict(rng=rng, weighting=weighting, eps=eps, xi=xi)
    if variant == ModelVariant.ZERO_SNR and prediction == Prediction.EPS:
        raise UnsupportedCombinationError("zero_snr variant supports only v-prediction")
    if prediction == Prediction.V:
        return make_v_pair(x0, t, tables, spec, offset=variant == ModelVariant.OFFSET, **kwargs)
    if variant == ModelVariant.OFFSET:
        return make_eps_pair_offset(x0, t, tables, spec, **kwargs)
    return make_eps_pair_proposed(x0, t, tables, spec, **kwargs)


def batch_loss(pairs: TrainingPair, predictions: np.ndarray) -> float:
    """
    Mean over the batch of weight * ||target - prediction||^2.

    Raises:
        LossError: If predictions do not match the pairs
    """
    predictions = np.asarray(predictions)
    if predictions.shape != pairs.target.shape:
        raise LossError(
            f"predictions shape {predictions.shape} does not match targets {pairs.target.shape}"
        )
    residual = pairs.target.astype(np.float64) - predictions.astype(np.float64)
    per_sample = np.sum(residual * residual, axis=1)
    return float(np.mean(pairs.weight * per_sample))
