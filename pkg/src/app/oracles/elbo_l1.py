"""
The t = 1 reconstruction term in both of its forms.

With reverse variance beta_1 and alpha_bar_0 = 1,
||x0 - mu_theta(x1, 1)||^2 / (2 beta_1) = lambda_1 ||sigma0 eps0 + phi_1 xi - eps_hat||^2,
which is the epsilon-loss summand because phi_1 = psi_1.
"""
from typing import Callable, Optional

import numpy as np

from src.app.services.denoiser import forward, init_params
from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

TOLERANCE = 1e-9

Net = Callable[[np.ndarray, int], np.ndarray]


def tiny_net(n: int, T: int, seed: int = 0) -> Net:
    """A fixed float64 MLP with two hidden layers of width 4."""
    params = init_params(n, embed_dim=4, seed=seed, hidden_dims=(4, 4), T=T, dtype=np.float64)
    return lambda x, t: forward(params, x, t)


def zero_net(x: np.ndarray, t: int) -> np.ndarray:
    return np.zeros_like(x)


def verify_elbo_l1(tables: ScheduleTables, net: Optional[Net] = None, n: int = 1, draws: int = 10_000,
                   sigma_c_sq: float = 1.0, seed: int = 0, name: str = "elbo_l1") -> VerifyReport:
    """
    Monte Carlo means of both sides over (x0, eps0, xi) draws.

    The error is the gap between the means relative to max(1, |mean|); the
    Monte Carlo standard error of the likelihood side goes in the detail.
    """
    rng = np.random.default_rng(seed)
    net = net or tiny_net(n, tables.T, seed)
    alpha, beta = tables.alpha[1], tables.sigma_rev_sq[1]
    sigma0, psi1, phi1 = tables.sigma0, tables.psi[1], tables.phi[1]

    x0 = rng.standard_normal((draws, n))
    eps0 = rng.standard_normal((draws, n))
    xi = np.sqrt(sigma_c_sq) * rng.standard_normal(draws)[:, None] * np.ones(n)
    x1 = np.sqrt(alpha) * x0 + np.sqrt(1.0 - alpha) * (sigma0 * eps0 + psi1 * xi)

    eps_hat = np.asarray(net(x1, 1), dtype=np.float64)
    mu = (x1 - (1.0 - alpha) / np.sqrt(1.0 - tables.alpha_bar[1]) * eps_hat) / np.sqrt(alpha)
    likelihood = np.sum((x0 - mu) ** 2, axis=1) / (2.0 * beta)

    lam = (1.0 - alpha) ** 2 / (2.0 * beta * alpha * (1.0 - tables.alpha_bar[1]))
    regression = lam * np.sum((sigma0 * eps0 + phi1 * xi - eps_hat) ** 2, axis=1)

    lhs, rhs = float(likelihood.mean()), float(regression.mean())
    gap = abs(lhs - rhs) / max(1.0, abs(lhs))
    stderr = float(likelihood.std(ddof=1) / np.sqrt(draws))
    weight_gap = abs(float(tables.lambda_eps[1]) - lam) / max(1.0, lam)
    error = max(gap, weight_gap)
    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if error <= TOLERANCE else CheckStatus.FAIL,
        error=error,
        tolerance=TOLERANCE,
        samples=draws,
        seed=seed,
        detail=f"sigma_c^2={sigma_c_sq}: E[L1] {lhs:.6g} +/- {stderr:.2g}, lambda_1 gap {weight_gap:.2e}",
    )
