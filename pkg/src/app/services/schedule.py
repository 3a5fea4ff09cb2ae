"""
Schedule construction service.

Builds beta schedules, derives the per-timestep coefficient tables, fills
the auxiliary-noise coefficients (gamma, phi, psi, nu) either from an
explicit gamma vector or with the balanced recursion, and rescales tables
to zero terminal SNR.

All arithmetic is float64. Arrays are 1-based with a sentinel at index 0
(alpha_0 = 1, beta_0 = 0).
"""
import hashlib
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.app.exceptions import DegenerateScheduleError, ScheduleError
from src.app.logging_config import get_logger
from src.models.schedule import BetaSchedule, ScheduleTables
from src.models.variant import GammaSource, ScheduleKind
from src.schemas.config import ScheduleConfig

logger = get_logger(__name__)

SCHEDULE_COLUMNS = (
    "t", "beta", "alpha", "alpha_bar", "gamma", "phi", "psi", "nu",
    "lambda_eps", "lambda_v", "beta_tilde",
)


def _validate_betas(beta: np.ndarray) -> None:
    body = beta[1:]
    if not np.all(np.isfinite(body)) or np.any(body <= 0.0) or np.any(body >= 1.0):
        bad = int(np.flatnonzero(~((body > 0.0) & (body < 1.0)))[0]) + 1
        raise ScheduleError(f"beta[{bad}] = {beta[bad]!r} is outside (0, 1)")


def build_log_linear_schedule(T: int, sigma_min: float, sigma_max: float) -> BetaSchedule:
    """
    Betas whose noise levels are log-uniformly spaced on [sigma_min, sigma_max].

    With noise level s_t, alpha_bar_t = 1 / (1 + s_t^2) and
    beta_t = 1 - alpha_bar_t / alpha_bar_{t-1}.

    Raises:
        ScheduleError: If T < 1 or the sigma range is invalid
    """
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not sigma_min > 0:
        raise ScheduleError(f"sigma_min must be positive, got {sigma_min}")
    if T > 1 and not sigma_min < sigma_max:
        raise ScheduleError(f"sigma_min ({sigma_min}) must be below sigma_max ({sigma_max})")
    if T == 1 and sigma_min > sigma_max:
        raise ScheduleError(f"sigma_min ({sigma_min}) must not exceed sigma_max ({sigma_max})")

    sigmas = np.exp(np.linspace(np.log(sigma_min), np.log(sigma_max), T, dtype=np.float64))
    alpha_bar = np.concatenate(([1.0], 1.0 / (1.0 + sigmas ** 2)))
    beta = np.zeros(T + 1, dtype=np.float64)
    beta[1:] = 1.0 - alpha_bar[1:] / alpha_bar[:-1]
    _validate_betas(beta)

    logger.debug(
        "Log-linear schedule built",
        extra={"T": T, "sigma_min": sigma_min, "sigma_max": sigma_max},
    )
    return BetaSchedule(T=T, beta=beta)


def build_scaled_linear_schedule(T: int = 1000, beta_start: float = 0.00085,
                                 beta_end: float = 0.012) -> BetaSchedule:
    """Betas linear in sqrt(beta) between beta_start and beta_end."""
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    beta = np.zeros(T + 1, dtype=np.float64)
    beta[1:] = np.linspace(beta_start ** 0.5, beta_end ** 0.5, T, dtype=np.float64) ** 2
    _validate_betas(beta)
    return BetaSchedule(T=T, beta=beta)


def _coefficient_tables(beta: np.ndarray, alpha: np.ndarray, alpha_bar: np.ndarray,
                        sigma0: float, label: str, zero_snr: bool = False) -> ScheduleTables:
    T = beta.shape[0] - 1
    alpha_bar_prev = np.concatenate(([1.0], alpha_bar[:-1]))
    sigma_sq = beta.copy()

    with np.errstate(divide="ignore", invalid="ignore"):
        lambda_eps = (1.0 - alpha) ** 2 / (2.0 * sigma_sq * alpha * (1.0 - alpha_bar))
        lambda_v = alpha_bar_prev * (1.0 - alpha) ** 2 / (2.0 * sigma_sq * (1.0 - alpha_bar))
        beta_tilde = (1.0 - alpha) * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar) * sigma0 ** 2
    lambda_eps[0] = np.nan
    lambda_v[0] = np.nan
    beta_tilde[:2] = np.nan

    nu = np.zeros(T + 1, dtype=np.float64)
    nu[:2] = np.nan

    return ScheduleTables(
        T=T,
        beta=beta,
        alpha=alpha,
        alpha_bar=alpha_bar,
        gamma=np.zeros(T + 1),
        phi=np.zeros(T + 1),
        psi=np.zeros(T + 1),
        nu=nu,
        lambda_eps=lambda_eps,
        lambda_v=lambda_v,
        beta_tilde=beta_tilde,
        sigma_rev_sq=sigma_sq,
        sigma0=float(sigma0),
        gamma_source=GammaSource.NONE,
        zero_snr=zero_snr,
        label=label,
    )


def derive_alpha_tables(bs: BetaSchedule, sigma0: float = 1.0, label: str = "") -> ScheduleTables:
    """
    Derive alpha, alpha_bar, beta_tilde and the loss weights from a beta schedule.

    The gamma column is all zeros, which is the plain diffusion process:
    phi = psi = nu = 0.
    """
    if not sigma0 > 0:
        raise ScheduleError(f"sigma0 must be positive, got {sigma0}")
    _validate_betas(bs.beta)
    beta = np.array(bs.beta, dtype=np.float64)
    beta[0] = 0.0
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return _coefficient_tables(beta, alpha, alpha_bar, sigma0, label=label)


def _phi_psi(alpha: np.ndarray, alpha_bar: np.ndarray, gamma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    alpha_bar_prev = np.concatenate(([1.0], alpha_bar[:-1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.sqrt(alpha) * np.sqrt(1.0 - alpha_bar) / (1.0 - alpha) * gamma
        psi = np.sqrt(alpha_bar) / np.sqrt(1.0 - alpha_bar) * np.cumsum(gamma / np.sqrt(alpha_bar_prev))
    phi[0] = 0.0
    psi[0] = 0.0
    return phi, psi


def with_gamma(tables: ScheduleTables, gamma: np.ndarray,
               source: GammaSource = GammaSource.CUSTOM) -> ScheduleTables:
    """
    Fill gamma, phi, psi and nu from an explicit gamma vector.

    Args:
        tables: Tables with alpha / alpha_bar populated
        gamma: gamma_1..gamma_T, either length T or T+1 (index 0 ignored)
        source: Provenance recorded on the result

    Returns:
        New tables; the input is left untouched

    Raises:
        ScheduleError: If gamma has the wrong length or is not finite
    """
    T = tables.T
    g = np.array(gamma, dtype=np.float64)
    if g.shape == (T,):
        g = np.concatenate(([0.0], g))
    elif g.shape != (T + 1,):
        raise ScheduleError(f"gamma must have length {T} or {T + 1}, got shape {g.shape}")
    g[0] = 0.0
    if not np.all(np.isfinite(g)):
        raise ScheduleError("gamma contains non-finite values")

    alpha, alpha_bar = tables.alpha, tables.alpha_bar
    phi, psi = _phi_psi(alpha, alpha_bar, g)

    nu = np.full(T + 1, np.nan)
    if T >= 2:
        a = alpha[2:]
        ab = alpha_bar[2:]
        ab_prev = alpha_bar[1:-1]
        nu[2:] = ((1.0 - a) * np.sqrt(1.0 - ab_prev) * psi[1:-1] - a * (1.0 - ab_prev) * g[2:]) / (1.0 - ab)

    return ScheduleTables(
        T=T,
        beta=tables.beta,
        alpha=alpha,
        alpha_bar=alpha_bar,
        gamma=g,
        phi=phi,
        psi=psi,
        nu=nu,
        lambda_eps=tables.lambda_eps,
        lambda_v=tables.lambda_v,
        beta_tilde=tables.beta_tilde,
        sigma_rev_sq=tables.sigma_rev_sq,
        sigma0=tables.sigma0,
        gamma_source=source,
        zero_snr=tables.zero_snr,
        label=tables.label,
    )


def balanced_gamma_hat(tables: ScheduleTables, gamma1: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Un-normalized balanced recursion started from gamma_hat_1 = gamma1.

    gamma_hat_t = (1 - alpha_t) sqrt(alpha_bar_{t-1}) / (alpha_t (1 - alpha_bar_{t-1}))
                  * sum_{i<t} gamma_hat_i / sqrt(alpha_bar_{i-1})

    Returns:
        (gamma_hat, phi_hat, psi_hat), each of length T+1

    Raises:
        DegenerateScheduleError: If alpha_bar_{t-1} = 1 for some t >= 2 or alpha_t = 0
    """
    T = tables.T
    alpha, alpha_bar = tables.alpha, tables.alpha_bar
    if np.any(alpha[1:] <= 0.0):
        t_bad = int(np.flatnonzero(alpha[1:] <= 0.0)[0]) + 1
        raise DegenerateScheduleError(f"alpha_{t_bad} = 0; the balanced recursion divides by alpha_t")

    gamma_hat = np.zeros(T + 1, dtype=np.float64)
    gamma_hat[1] = gamma1
    # running holds sum_{i<t} gamma_hat_i / sqrt(alpha_bar_{i-1})
    running = gamma1 / np.sqrt(alpha_bar[0])
    for t in range(2, T + 1):
        denom = alpha[t] * (1.0 - alpha_bar[t - 1])
        # exact zero only when alpha_bar_{t-1} == 1, i.e. no noise added before t
        if denom == 0.0:
            raise DegenerateScheduleError(
                f"alpha_bar_{t - 1} = 1; the balanced recursion is undefined at t = {t}"
            )
        gamma_hat[t] = (1.0 - alpha[t]) * np.sqrt(alpha_bar[t - 1]) / denom * running
        running += gamma_hat[t] / np.sqrt(alpha_bar[t - 1])

    phi_hat, psi_hat = _phi_psi(alpha, alpha_bar, gamma_hat)
    return gamma_hat, phi_hat, psi_hat


def build_balanced_gamma(tables: ScheduleTables) -> ScheduleTables:
    """
    Construct gamma so that phi_t = psi_t for every t and psi_T = 1.

    Raises:
        DegenerateScheduleError: If the recursion or the normalization divides by zero
    """
    gamma_hat, _, psi_hat = balanced_gamma_hat(tables, 1.0)
    psi_T = psi_hat[tables.T]
    if not np.isfinite(psi_T) or psi_T == 0.0:
        raise DegenerateScheduleError(f"psi_hat_T = {psi_T!r}; cannot normalize gamma")

    # phi and psi are linear in gamma, so the scaling keeps phi = psi
    balanced = with_gamma(tables, gamma_hat / psi_T, source=GammaSource.BALANCED)
    logger.debug(
        "Balanced gamma built",
        extra={
            "T": tables.T,
            "psi_hat_T": float(psi_T),
            "max_abs_nu": balanced.max_abs_nu(),
            "max_phi_psi_gap": float(np.max(np.abs(balanced.phi[1:] - balanced.psi[1:]))),
        },
    )
    return balanced


def zero_snr_rescale(tables: ScheduleTables) -> ScheduleTables:
    """
    Shift and scale sqrt(alpha_bar) so the terminal SNR is exactly zero.

    s'_t = (s_t - s_T) * s_1 / (s_1 - s_T) with s_t = sqrt(alpha_bar_t). The
    first entry is kept and alpha_bar'_T = 0. Betas are re-derived from the new
    alpha_bar, so beta'_T = 1. Rescaling already-rescaled tables returns them
    unchanged.

    Raises:
        ScheduleError: If T < 2, the tables carry a gamma column, or alpha_bar is not decreasing
    """
    T = tables.T
    if T < 2:
        raise ScheduleError("zero-SNR rescaling needs T >= 2")
    if tables.gamma_source != GammaSource.NONE:
        raise ScheduleError("zero-SNR rescaling applies to tables without a gamma column")

    s = np.sqrt(tables.alpha_bar[1:])
    s1, sT = s[0], s[-1]
    if not s1 > sT:
        raise ScheduleError(f"sqrt(alpha_bar_1) = {s1!r} must exceed sqrt(alpha_bar_T) = {sT!r}")

    s_new = (s - sT) * s1 / (s1 - sT)
    alpha_bar = np.concatenate(([1.0], s_new ** 2))
    # pin both ends against rounding in the shift and scale
    alpha_bar[1] = tables.alpha_bar[1]
    alpha_bar[T] = 0.0
    alpha = np.ones(T + 1, dtype=np.float64)
    alpha[1:] = alpha_bar[1:] / alpha_bar[:-1]
    beta = 1.0 - alpha

    logger.debug("Zero-SNR rescale applied", extra={"T": T, "alpha_bar_T_before": float(sT ** 2)})
    return _coefficient_tables(beta, alpha, alpha_bar, tables.sigma0, label=tables.label, zero_snr=True)


def build_tables(cfg: ScheduleConfig, sigma0: float = 1.0) -> ScheduleTables:
    """Build the full tables a schedule config section describes."""
    if cfg.kind == ScheduleKind.LOG_LINEAR:
        bs = build_log_linear_schedule(cfg.T, cfg.sigma_min, cfg.sigma_max)
    else:
        bs = build_scaled_linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end)

    tables = derive_alpha_tables(bs, sigma0, label=cfg.kind.value)
    if cfg.zero_snr:
        tables = zero_snr_rescale(tables)
    if cfg.balanced:
        tables = build_balanced_gamma(tables)

    logger.info(
        "Schedule tables built",
        extra={
            "kind": cfg.kind.value,
            "T": cfg.T,
            "balanced": cfg.balanced,
            "zero_snr": cfg.zero_snr,
            "alpha_bar_T": float(tables.alpha_bar[-1]),
        },
    )
    return tables


def schedule_hash(tables: ScheduleTables) -> str:
    """First 16 hex chars of SHA-256 over the defining columns."""
    digest = hashlib.sha256()
    digest.update(f"{tables.T}|{tables.sigma0!r}|{tables.gamma_source.value}|{tables.zero_snr}".encode())
    for column in (tables.beta, tables.alpha_bar, tables.gamma):
        digest.update(np.ascontiguousarray(column, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


def schedule_rows(tables: ScheduleTables, columns: Optional[Tuple[str, ...]] = None) -> List[Dict[str, float]]:
    """Rows t = 1..T of the tables, one dict per timestep."""
    columns = columns or SCHEDULE_COLUMNS
    rows = []
    for t in range(1, tables.T + 1):
        row: Dict[str, float] = {}
        for name in columns:
            row[name] = t if name == "t" else float(getattr(tables, name)[t])
        rows.append(row)
    return rows
