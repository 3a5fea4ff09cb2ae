"""
Forward and reverse process operations.

Every function accepts a single state of shape (n,) or a batch (B, n); the
timestep is a scalar or a (B,) array. Noise can be forced through ``eps=``
so callers can replay a stream or substitute zero noise.
"""
from typing import Optional, Tuple

import numpy as np

from src.app.exceptions import ProcessError, UnsupportedCombinationError
from src.app.services.xi_noise import sample_xi_batch
from src.models.schedule import ScheduleTables
from src.schemas.config import XiSpec


def coef(column: np.ndarray, t: np.ndarray):
    """Look up a table column at t, shaped to broadcast against (B, n) states."""
    values = column[t]
    if np.ndim(values):
        return values[:, None]
    return float(values)


def _noise(shape, rng: Optional[np.random.Generator], eps: Optional[np.ndarray]) -> np.ndarray:
    if eps is not None:
        eps = np.asarray(eps, dtype=np.float64)
        if eps.shape != shape:
            raise ProcessError(f"forced noise has shape {eps.shape}, expected {shape}")
        return eps
    if rng is None:
        raise ProcessError("either rng or eps must be given")
    return rng.standard_normal(shape)


def forward_step(x_prev: np.ndarray, xi: np.ndarray, t, tables: ScheduleTables,
                 rng: Optional[np.random.Generator] = None,
                 eps: Optional[np.ndarray] = None) -> np.ndarray:
    """x_t = sqrt(alpha_t) (x_{t-1} + gamma_t xi) + sqrt(beta_t) sigma0 eps."""
    t = tables.check_timestep(t)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    noise = _noise(x_prev.shape, rng, eps)
    return (
        np.sqrt(coef(tables.alpha, t)) * (x_prev + coef(tables.gamma, t) * xi)
        + np.sqrt(coef(tables.beta, t)) * tables.sigma0 * noise
    )


def forward_marginal(x0: np.ndarray, xi: np.ndarray, t, tables: ScheduleTables,
                     rng: Optional[np.random.Generator] = None,
                     eps: Optional[np.ndarray] = None) -> np.ndarray:
    """One draw of x_t ~ q(x_t | x_0, xi) in closed form."""
    t = tables.check_timestep(t)
    x0 = np.asarray(x0, dtype=np.float64)
    noise = _noise(x0.shape, rng, eps)
    alpha_bar = coef(tables.alpha_bar, t)
    return np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * (
        tables.sigma0 * noise + coef(tables.psi, t) * xi
    )


def marginal_moments(x0: np.ndarray, xi: np.ndarray, t, tables: ScheduleTables) -> Tuple[np.ndarray, float]:
    """Mean and per-component variance of q(x_t | x_0, xi)."""
    t = tables.check_timestep(t)
    alpha_bar = coef(tables.alpha_bar, t)
    mean = np.sqrt(alpha_bar) * np.asarray(x0, dtype=np.float64) + np.sqrt(1.0 - alpha_bar) * coef(tables.psi, t) * xi
    return mean, (1.0 - alpha_bar) * tables.sigma0 ** 2


def posterior_params(x_t: np.ndarray, x0: np.ndarray, xi: np.ndarray, t,
                     tables: ScheduleTables) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and variance of q(x_{t-1} | x_t, x_0, xi).

    Raises:
        ProcessError: If t < 2
    """
    t = tables.check_timestep(t, lo=2)
    alpha = coef(tables.alpha, t)
    alpha_bar = coef(tables.alpha_bar, t)
    alpha_bar_prev = coef(tables.alpha_bar, t - 1)
    mu = (
        np.sqrt(alpha) * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar) * x_t
        + (1.0 - alpha) * np.sqrt(alpha_bar_prev) / (1.0 - alpha_bar) * x0
        + coef(tables.nu, t) * xi
    )
    return mu, tables.beta_tilde[t]


def mu_from_eps(x_t: np.ndarray, eps_hat: np.ndarray, t, tables: ScheduleTables) -> np.ndarray:
    """
    Reverse mean under the epsilon parameterization.

    Raises:
        UnsupportedCombinationError: For zero-SNR tables
    """
    if tables.zero_snr:
        raise UnsupportedCombinationError("epsilon parameterization is undefined on zero-SNR tables; use v")
    t = tables.check_timestep(t)
    alpha = coef(tables.alpha, t)
    c1 = 1.0 / np.sqrt(alpha)
    c2 = (1.0 - alpha) / (np.sqrt(1.0 - coef(tables.alpha_bar, t)) * np.sqrt(alpha))
    return c1 * x_t - c2 * eps_hat


def mu_from_v(x_t: np.ndarray, v_hat: np.ndarray, t, tables: ScheduleTables) -> np.ndarray:
    """Reverse mean under the v parameterization; valid on zero-SNR tables."""
    t = tables.check_timestep(t)
    alpha = coef(tables.alpha, t)
    alpha_bar = coef(tables.alpha_bar, t)
    alpha_bar_prev = coef(tables.alpha_bar, t - 1)
    c_x = (np.sqrt(alpha) * (1.0 - alpha_bar_prev) + (1.0 - alpha) * np.sqrt(alpha_bar_prev * alpha_bar)) / (1.0 - alpha_bar)
    c_v = (1.0 - alpha) * np.sqrt(alpha_bar_prev) / np.sqrt(1.0 - alpha_bar)
    return c_x * x_t - c_v * v_hat


def x0_from_v(x_t: np.ndarray, v: np.ndarray, t, tables: ScheduleTables) -> np.ndarray:
    """x_0 = sqrt(alpha_bar_t) x_t - sqrt(1 - alpha_bar_t) v_t."""
    t = tables.check_timestep(t)
    alpha_bar = coef(tables.alpha_bar, t)
    return np.sqrt(alpha_bar) * x_t - np.sqrt(1.0 - alpha_bar) * v


def v_from_eps(x_t: np.ndarray, eps: np.ndarray, t, tables: ScheduleTables) -> np.ndarray:
    """
    Convert a noise prediction to a velocity at the same x_t.

    Uses v = (eps - sqrt(1 - alpha_bar) x_t) / sqrt(alpha_bar), which holds
    whenever x_t = sqrt(alpha_bar) x_0 + sqrt(1 - alpha_bar) eps.
    """
    t = tables.check_timestep(t)
    alpha_bar = coef(tables.alpha_bar, t)
    return (eps - np.sqrt(1.0 - alpha_bar) * x_t) / np.sqrt(alpha_bar)


def eps_from_v(x_t: np.ndarray, v: np.ndarray, t, tables: ScheduleTables) -> np.ndarray:
    """Inverse of ``v_from_eps``: eps = sqrt(alpha_bar) v + sqrt(1 - alpha_bar) x_t."""
    t = tables.check_timestep(t)
    alpha_bar = coef(tables.alpha_bar, t)
    return np.sqrt(alpha_bar) * v + np.sqrt(1.0 - alpha_bar) * x_t


def reverse_init(spec: XiSpec, tables: ScheduleTables, rng: np.random.Generator,
                 size: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw xi ~ q(xi), then x_T ~ N(xi, sigma0^2 I).

    Args:
        spec: q(xi)
        tables: Supplies sigma0
        rng: Generator; xi is drawn before the Gaussian
        size: Number of chains; None returns single vectors

    Returns:
        (x_T, xi)
    """
    count = 1 if size is None else size
    xi = sample_xi_batch(spec, rng, count)
    x_T = xi + tables.sigma0 * rng.standard_normal((count, spec.dim))
    if size is None:
        return x_T[0], xi[0]
    return x_T, xi
