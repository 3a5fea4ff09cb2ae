"""
How far q(x_T | x0, xi) is from the reverse start N(xi, sigma0^2 I) at finite T.
"""
import numpy as np

from src.models.schedule import ScheduleTables
from src.schemas.metrics import CheckStatus, VerifyReport


def terminal_moment_gap(tables: ScheduleTables, k: float = 2.0, sigma_c_sq: float = 1.0,
                        name: str = "terminal_moment_gap") -> VerifyReport:
    """
    Per-component KL(q(x_T | x0, xi) || N(xi, sigma0^2)) at |x0| = k and
    |xi| = 2 sigma_c, reported for information only.
    """
    T = tables.T
    ab, psi, s2 = tables.alpha_bar[T], tables.psi[T], tables.sigma0 ** 2
    xi = 2.0 * np.sqrt(sigma_c_sq)
    mean_gap = np.sqrt(ab) * k + abs(np.sqrt(1.0 - ab) * psi - 1.0) * xi
    var_ratio = (1.0 - ab)
    kl = 0.5 * (var_ratio + mean_gap ** 2 / s2 - 1.0 - np.log(var_ratio))
    return VerifyReport(
        check=name,
        status=CheckStatus.INFO,
        error=float(kl),
        tolerance=0.0,
        samples=0,
        detail=(
            f"T={T} {tables.label}: alpha_bar_T {ab:.3e}, sqrt(1-ab_T) psi_T {np.sqrt(1.0 - ab) * psi:.6f}, "
            f"mean gap {mean_gap:.3e}"
        ),
    )
