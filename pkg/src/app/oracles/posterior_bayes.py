"""
q(x_{t-1} | x_t, x_0, xi) as the product of two 1-D Gaussians.

Prior:      x_{t-1} ~ N(sqrt(ab_{t-1}) x0 + sqrt(1 - ab_{t-1}) psi_{t-1} xi, (1 - ab_{t-1}) sigma0^2)
Likelihood: x_t | x_{t-1} ~ N(sqrt(a_t) (x_{t-1} + gamma_t xi), beta_t sigma0^2)
"""
import numpy as np

from src.app.services.process import posterior_params
from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

TOLERANCE = 1e-12


def _psi(alpha_bar: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    psi = np.zeros_like(alpha_bar)
    total = 0.0
    for t in range(1, alpha_bar.shape[0]):
        total += gamma[t] / np.sqrt(alpha_bar[t - 1])
        psi[t] = np.sqrt(alpha_bar[t]) / np.sqrt(1.0 - alpha_bar[t]) * total
    return psi


def gaussian_product(x_t: float, x0: float, xi: float, t: int, tables: ScheduleTables, psi: np.ndarray):
    """Mean and variance of the normalized prior x likelihood product in x_{t-1}."""
    a, ab_prev = tables.alpha[t], tables.alpha_bar[t - 1]
    s2 = tables.sigma0 ** 2
    prior_mean = np.sqrt(ab_prev) * x0 + np.sqrt(1.0 - ab_prev) * psi[t - 1] * xi
    prior_var = (1.0 - ab_prev) * s2
    # beta_t as 1 - alpha_t, the value the stored alpha encodes
    step_var = (1.0 - a) * s2

    precision = 1.0 / prior_var + a / step_var
    var = 1.0 / precision
    mean = var * (prior_mean / prior_var + np.sqrt(a) * (x_t - np.sqrt(a) * tables.gamma[t] * xi) / step_var)
    return mean, var


def verify_posterior_bayes(tables: ScheduleTables, seed: int = 0, name: str = "posterior_bayes") -> VerifyReport:
    """n = 1, every t in [2, T], one random (x0, xi, x_t) per t."""
    T = tables.T
    if T < 2:
        return VerifyReport(check=name, status=CheckStatus.PASS, error=0.0,
                            tolerance=TOLERANCE, seed=seed, detail="T=1: no t >= 2")

    rng = np.random.default_rng(seed)
    psi = _psi(tables.alpha_bar, tables.gamma)
    worst, worst_t = 0.0, 0
    for t in range(2, T + 1):
        x0 = float(rng.uniform(-1.0, 1.0))
        xi = float(rng.uniform(-1.0, 1.0))
        ab = tables.alpha_bar[t]
        x_t = float(np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * (tables.sigma0 * rng.standard_normal() + psi[t] * xi))

        expected_mean, expected_var = gaussian_product(x_t, x0, xi, t, tables, psi)
        mu, var = posterior_params(np.array([x_t]), np.array([x0]), np.array([xi]), t, tables)
        gap = max(
            abs(float(mu[0]) - expected_mean) / max(1.0, abs(expected_mean)),
            abs(float(var) - expected_var) / max(1.0, expected_var),
        )
        if gap > worst:
            worst, worst_t = gap, t

    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if worst <= TOLERANCE else CheckStatus.FAIL,
        error=worst,
        tolerance=TOLERANCE,
        samples=T - 1,
        seed=seed,
        detail=f"T={T} gamma={tables.gamma_source.value}; worst at t={worst_t}",
    )
