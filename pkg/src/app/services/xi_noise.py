"""
Auxiliary-noise sampling.

The correlated Gaussian has covariance sigma_c^2 * 1_{n x n}, which is rank
one, so a draw is a single scalar normal times sigma_c * 1_n.
"""
import numpy as np

from src.models.variant import XiKind
from src.schemas.config import XiSpec


def is_zero(spec: XiSpec) -> bool:
    """True when q(xi) is the point mass at zero."""
    return spec.kind == XiKind.DELTA_ZERO or spec.sigma_c_sq == 0.0


def sample_xi_scalars(spec: XiSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    The scalar factor of ``size`` draws, already multiplied by sigma_c.

    Point-mass specs return zeros without touching the generator, so a
    DeltaZero stream stays aligned with plain diffusion code.
    """
    if is_zero(spec):
        return np.zeros(size, dtype=np.float64)
    return rng.standard_normal(size) * np.sqrt(spec.sigma_c_sq)


def sample_xi_batch(spec: XiSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of xi, shape (size, n)."""
    scalars = sample_xi_scalars(spec, rng, size)
    return np.repeat(scalars[:, None], spec.dim, axis=1)


def sample_xi(spec: XiSpec, rng: np.random.Generator) -> np.ndarray:
    """One draw of xi, shape (n,)."""
    return sample_xi_batch(spec, rng, 1)[0]
