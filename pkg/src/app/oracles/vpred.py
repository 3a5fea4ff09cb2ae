"""
Velocity-parameterization identities on balanced (or gamma-free) tables.
"""
import numpy as np

from src.app.exceptions import ScheduleError
from src.app.services.process import mu_from_v, x0_from_v
from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

TOLERANCE = 1e-9
NU_LIMIT = 1e-9
DIM = 2


def _rel(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(1.0, np.abs(b))))


def _bayes_mean(x_t, x0, xi, t: int, tables: ScheduleTables, psi_prev: float) -> np.ndarray:
    a, ab_prev, s2 = tables.alpha[t], tables.alpha_bar[t - 1], tables.sigma0 ** 2
    prior_mean = np.sqrt(ab_prev) * x0 + np.sqrt(1.0 - ab_prev) * psi_prev * xi
    prior_var = (1.0 - ab_prev) * s2
    step_var = (1.0 - a) * s2
    var = 1.0 / (1.0 / prior_var + a / step_var)
    return var * (prior_mean / prior_var + np.sqrt(a) * (x_t - np.sqrt(a) * tables.gamma[t] * xi) / step_var)


def verify_vpred_identities(tables: ScheduleTables, trials: int = 1000, seed: int = 0,
                            name: str = "vpred_identities") -> VerifyReport:
    """
    x0 reconstruction, mu_from_v against the Bayes posterior mean (x0 itself
    at t = 1) and the lambda^v column, over ``trials`` random tuples.

    Raises:
        ScheduleError: If the tables have nu_t != 0
    """
    if tables.max_abs_nu() > NU_LIMIT:
        raise ScheduleError(f"v identities need nu_t = 0; max |nu_t| = {tables.max_abs_nu():.3e}")

    rng = np.random.default_rng(seed)
    sigma0 = tables.sigma0
    recon_gap = mean_gap = weight_gap = 0.0
    for _ in range(trials):
        t = int(rng.integers(1, tables.T + 1))
        x0 = rng.standard_normal(DIM)
        eps0 = rng.standard_normal(DIM)
        xi = np.full(DIM, rng.standard_normal())

        ab = tables.alpha_bar[t]
        noise = sigma0 * eps0 + tables.psi[t] * xi
        x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise
        v = np.sqrt(ab) * noise - np.sqrt(1.0 - ab) * x0

        recon_gap = max(recon_gap, _rel(x0_from_v(x_t, v, t, tables), x0))
        expected = x0 if t == 1 else _bayes_mean(x_t, x0, xi, t, tables, tables.psi[t - 1])
        mean_gap = max(mean_gap, _rel(mu_from_v(x_t, v, t, tables), expected))

        a, ab_prev = tables.alpha[t], tables.alpha_bar[t - 1]
        lam = ab_prev * (1.0 - a) ** 2 / (2.0 * tables.sigma_rev_sq[t] * (1.0 - ab))
        weight_gap = max(weight_gap, abs(tables.lambda_v[t] - lam) / max(1.0, abs(lam)))

    worst = max(recon_gap, mean_gap, weight_gap)
    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if worst <= TOLERANCE else CheckStatus.FAIL,
        error=worst,
        tolerance=TOLERANCE,
        samples=trials,
        seed=seed,
        detail=(
            f"T={tables.T} zero_snr={tables.zero_snr}: x0 {recon_gap:.2e}, "
            f"mean {mean_gap:.2e}, lambda_v {weight_gap:.2e}"
        ),
    )
