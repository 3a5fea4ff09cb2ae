"""
Sequential composition of forward steps against the closed-form marginal.
"""
from typing import Optional, Sequence

import numpy as np

from src.app.services.process import forward_step
from src.models.schedule import ScheduleTables
from src.models.variant import XiKind
from src.schemas.config import XiSpec
from src.schemas.metrics import CheckStatus, VerifyReport

SE_LIMIT = 4.0
MIN_DRAWS = 10_000


def _default_grid(T: int) -> Sequence[int]:
    return sorted({1, max(1, T // 4), max(1, T // 2), T})


def _psi(alpha_bar: np.ndarray, gamma: np.ndarray, t: int) -> float:
    total = sum(gamma[i] / np.sqrt(alpha_bar[i - 1]) for i in range(1, t + 1))
    return float(np.sqrt(alpha_bar[t]) / np.sqrt(1.0 - alpha_bar[t]) * total)


def verify_marginal_composition(tables: ScheduleTables, spec: XiSpec, n: int = 2, draws: int = 100_000,
                                t_grid: Optional[Sequence[int]] = None, seed: int = 0,
                                name: str = "marginal_composition") -> VerifyReport:
    """
    Push ``draws`` trajectories from a fixed x0 through ``forward_step`` and
    compare empirical moments at each grid time with
    mean sqrt(ab_t) x0, variance (1 - ab_t)(sigma0^2 + psi_t^2 sigma_c^2) and
    cross-covariance (1 - ab_t) psi_t^2 sigma_c^2.

    The error is the largest deviation in standard errors.
    """
    draws = max(int(draws), MIN_DRAWS)
    grid = sorted(set(t_grid or _default_grid(tables.T)))
    rng = np.random.default_rng(seed)

    x0 = np.linspace(-1.0, 1.0, n) if n > 1 else np.array([0.5])
    sigma_c_sq = spec.sigma_c_sq if spec.kind == XiKind.CORRELATED_GAUSSIAN else 0.0
    xi = np.sqrt(sigma_c_sq) * rng.standard_normal(draws)[:, None] * np.ones(n)

    x = np.tile(x0, (draws, 1))
    worst, where = 0.0, ""
    for t in range(1, grid[-1] + 1):
        x = forward_step(x, xi, t, tables, rng=rng)
        if t not in grid:
            continue

        ab = tables.alpha_bar[t]
        psi = _psi(tables.alpha_bar, tables.gamma, t)
        mean = np.sqrt(ab) * x0
        var = (1.0 - ab) * (tables.sigma0 ** 2 + psi ** 2 * sigma_c_sq)
        cov = (1.0 - ab) * psi ** 2 * sigma_c_sq

        emp_mean = x.mean(axis=0)
        emp_var = x.var(axis=0, ddof=1)
        se_mean = np.sqrt(var / draws)
        se_var = var * np.sqrt(2.0 / (draws - 1))
        deviations = {
            "mean": np.max(np.abs(emp_mean - mean) / se_mean),
            "var": np.max(np.abs(emp_var - var) / se_var),
        }
        if n > 1:
            centered = x - emp_mean
            emp_cov = float(np.mean(centered[:, 0] * centered[:, 1]) * draws / (draws - 1))
            se_cov = np.sqrt((var * var + cov * cov) / (draws - 1))
            deviations["cov"] = abs(emp_cov - cov) / se_cov
        for moment, dev in deviations.items():
            if dev > worst:
                worst, where = float(dev), f"{moment} at t={t}"

    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if worst <= SE_LIMIT else CheckStatus.FAIL,
        error=worst,
        tolerance=SE_LIMIT,
        samples=draws,
        seed=seed,
        detail=f"T={tables.T} sigma0={tables.sigma0} sigma_c^2={sigma_c_sq} t={grid}; worst {where or '-'}",
    )
