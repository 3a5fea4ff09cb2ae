"""
phi_t = psi_t - sqrt(1 - ab_t) sqrt(a_t) / (1 - a_t) * nu_t, and the reverse
mean written through phi.
"""
import numpy as np

from src.app.services.process import posterior_params
from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

IDENTITY_TOLERANCE = 1e-10
MEAN_TOLERANCE = 1e-9
DIM = 3


def verify_lemma1(tables: ScheduleTables, trials: int = 100, seed: int = 0,
                  name: str = "lemma1") -> VerifyReport:
    """
    Check the phi / psi / nu identity column by column for t >= 2, then
    compare mu = (x_t - (1 - a_t) / sqrt(1 - ab_t) (sigma0 eps0 + phi_t xi)) / sqrt(a_t)
    with ``posterior_params`` over ``trials`` random (t, x0, eps0, xi).
    """
    T = tables.T
    if T < 2:
        return VerifyReport(check=name, status=CheckStatus.PASS, error=0.0,
                            tolerance=IDENTITY_TOLERANCE, seed=seed, detail="T=1: no t >= 2")

    a = tables.alpha[2:]
    ab = tables.alpha_bar[2:]
    phi, psi, nu = tables.phi[2:], tables.psi[2:], tables.nu[2:]
    rhs = psi - np.sqrt(1.0 - ab) * np.sqrt(a) / (1.0 - a) * nu
    scale = np.maximum.reduce([np.ones_like(phi), np.abs(phi), np.abs(psi)])
    identity_gap = float(np.max(np.abs(phi - rhs) / scale))

    rng = np.random.default_rng(seed)
    sigma0 = tables.sigma0
    mean_gap = 0.0
    for _ in range(trials):
        t = int(rng.integers(2, T + 1))
        x0 = rng.standard_normal(DIM)
        eps0 = rng.standard_normal(DIM)
        xi = np.full(DIM, rng.standard_normal())

        alpha, alpha_bar = tables.alpha[t], tables.alpha_bar[t]
        x_t = np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * (sigma0 * eps0 + tables.psi[t] * xi)
        mu_phi = (x_t - (1.0 - alpha) / np.sqrt(1.0 - alpha_bar) * (sigma0 * eps0 + tables.phi[t] * xi)) / np.sqrt(alpha)

        mu, _ = posterior_params(x_t, x0, xi, t, tables)
        gap = np.max(np.abs(mu - mu_phi) / np.maximum(1.0, np.abs(mu_phi)))
        mean_gap = max(mean_gap, float(gap))

    failed = identity_gap > IDENTITY_TOLERANCE or mean_gap > MEAN_TOLERANCE
    return VerifyReport(
        check=name,
        status=CheckStatus.FAIL if failed else CheckStatus.PASS,
        error=max(identity_gap, mean_gap),
        tolerance=IDENTITY_TOLERANCE,
        samples=trials,
        seed=seed,
        detail=f"T={T} gamma={tables.gamma_source.value}: identity {identity_gap:.2e}, mean form {mean_gap:.2e}",
    )
