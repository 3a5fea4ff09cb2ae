"""
Balanced gamma solved directly from phi_t = psi_t, one timestep at a time.
"""
import numpy as np

from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport

GAMMA_TOLERANCE = 1e-10
PHI_PSI_TOLERANCE = 1e-10
PSI_T_TOLERANCE = 1e-10
NU_TOLERANCE = 1e-9


def solve_balanced_gamma(alpha: np.ndarray, alpha_bar: np.ndarray) -> np.ndarray:
    """
    Gamma with phi_t = psi_t for every t and psi_T = 1.

    Writing S_{t-1} = sum_{i<t} gamma_i / sqrt(ab_{i-1}), the condition at t
    is linear in gamma_t; gamma_1 is free and set to 1 before normalizing.
    """
    T = alpha.shape[0] - 1
    gamma = np.zeros(T + 1)
    gamma[1] = 1.0
    running = gamma[1] / np.sqrt(alpha_bar[0])
    for t in range(2, T + 1):
        a, ab, ab_prev = alpha[t], alpha_bar[t], alpha_bar[t - 1]
        lhs = np.sqrt(a) * np.sqrt(1.0 - ab) / (1.0 - a) - np.sqrt(ab) / (np.sqrt(1.0 - ab) * np.sqrt(ab_prev))
        rhs = np.sqrt(ab) / np.sqrt(1.0 - ab) * running
        gamma[t] = rhs / lhs
        running += gamma[t] / np.sqrt(ab_prev)
    psi_T = np.sqrt(alpha_bar[T]) / np.sqrt(1.0 - alpha_bar[T]) * running
    return gamma / psi_T


def verify_balanced_gamma(tables: ScheduleTables, name: str = "balanced_gamma") -> VerifyReport:
    """Table gamma against the direct solve, plus phi = psi, psi_T = 1 and nu = 0."""
    T = tables.T
    expected = solve_balanced_gamma(tables.alpha, tables.alpha_bar)
    body = slice(1, T + 1)
    gamma_gap = float(np.max(np.abs(tables.gamma[body] - expected[body]) / np.maximum(np.abs(expected[body]), 1e-300)))
    phi_psi = float(np.max(np.abs(tables.phi[body] - tables.psi[body])))
    psi_T = abs(float(tables.psi[T]) - 1.0)
    nu = float(np.max(np.abs(tables.nu[2:]))) if T >= 2 else 0.0

    failures = []
    if gamma_gap > GAMMA_TOLERANCE:
        failures.append(f"gamma rel gap {gamma_gap:.2e}")
    if phi_psi > PHI_PSI_TOLERANCE:
        failures.append(f"|phi - psi| {phi_psi:.2e}")
    if psi_T > PSI_T_TOLERANCE:
        failures.append(f"|psi_T - 1| {psi_T:.2e}")
    if nu > NU_TOLERANCE:
        failures.append(f"|nu| {nu:.2e}")

    return VerifyReport(
        check=name,
        status=CheckStatus.FAIL if failures else CheckStatus.PASS,
        error=max(gamma_gap, phi_psi, psi_T),
        tolerance=GAMMA_TOLERANCE,
        samples=T,
        detail="; ".join(failures) or f"T={T} {tables.label}: max |nu| {nu:.2e}",
    )
