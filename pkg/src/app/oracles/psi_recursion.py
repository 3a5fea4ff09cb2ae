"""
psi_t two ways: the direct sum and the one-step recursion.
"""
import numpy as np

from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

TOLERANCE = 1e-11


def psi_direct(alpha_bar: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """psi_t = sqrt(ab_t) / sqrt(1 - ab_t) * sum_{i<=t} gamma_i / sqrt(ab_{i-1})."""
    T = alpha_bar.shape[0] - 1
    psi = np.zeros(T + 1)
    running = 0.0
    for t in range(1, T + 1):
        running += gamma[t] / np.sqrt(alpha_bar[t - 1])
        psi[t] = np.sqrt(alpha_bar[t]) / np.sqrt(1.0 - alpha_bar[t]) * running
    return psi


def psi_recursive(alpha: np.ndarray, alpha_bar: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """psi_t = sqrt(a_t) sqrt(1 - ab_{t-1}) / sqrt(1 - ab_t) psi_{t-1} + sqrt(a_t) / sqrt(1 - ab_t) gamma_t."""
    T = alpha.shape[0] - 1
    psi = np.zeros(T + 1)
    for t in range(1, T + 1):
        root = np.sqrt(1.0 - alpha_bar[t])
        psi[t] = (
            np.sqrt(alpha[t]) * np.sqrt(1.0 - alpha_bar[t - 1]) / root * psi[t - 1]
            + np.sqrt(alpha[t]) / root * gamma[t]
        )
    return psi


def verify_psi_direct_vs_recursive(tables: ScheduleTables, name: str = "psi_direct_vs_recursive") -> VerifyReport:
    """
    Max gap between the two psi forms and the table column, relative to max(1, |psi_t|).
    """
    direct = psi_direct(tables.alpha_bar, tables.gamma)
    recursive = psi_recursive(tables.alpha, tables.alpha_bar, tables.gamma)
    body = slice(1, tables.T + 1)
    scale = np.maximum(1.0, np.abs(direct[body]))
    gap = max(
        float(np.max(np.abs(direct[body] - recursive[body]) / scale)),
        float(np.max(np.abs(direct[body] - tables.psi[body]) / scale)),
    )
    return VerifyReport(
        check=name,
        status=CheckStatus.PASS if gap <= TOLERANCE else CheckStatus.FAIL,
        error=gap,
        tolerance=TOLERANCE,
        samples=tables.T,
        detail=f"T={tables.T} {tables.label} gamma={tables.gamma_source.value}",
    )
