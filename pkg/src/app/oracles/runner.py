"""
Run every oracle over the reference schedules and collect the reports.
"""
import json
from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np

from src.app.logging_config import get_logger
from src.app.oracles.balanced import verify_balanced_gamma
from src.app.oracles.ddpm_reference import verify_ddpm_reduction
from src.app.oracles.elbo_l1 import verify_elbo_l1, zero_net
from src.app.oracles.lemma1 import verify_lemma1
from src.app.oracles.marginal import verify_marginal_composition
from src.app.oracles.posterior_bayes import verify_posterior_bayes
from src.app.oracles.psi_recursion import verify_psi_direct_vs_recursive
from src.app.oracles.terminal_gap import terminal_moment_gap
from src.app.oracles.vpred import verify_vpred_identities
from src.app.services.schedule import (
    build_balanced_gamma,
    build_log_linear_schedule,
    build_scaled_linear_schedule,
    derive_alpha_tables,
    with_gamma,
    zero_snr_rescale,
)
from src.models.schedule import BetaSchedule, ScheduleTables
from src.models.variant import XiKind
from src.schemas.config import XiSpec
from src.schemas.metrics import VerifyReport

logger = get_logger(__name__)

Check = Callable[[], VerifyReport]


class ReferenceTables:
    """The schedules every run of ``verify`` checks against."""

    def __init__(self, seed: int = 0):
        self.log_linear = derive_alpha_tables(build_log_linear_schedule(200, 0.01, 10.0), label="log_linear_T200")
        self.scaled_linear = derive_alpha_tables(build_scaled_linear_schedule(1000), label="scaled_linear_T1000")
        self.single = derive_alpha_tables(build_log_linear_schedule(1, 1.0, 1.0), label="log_linear_T1")
        self.hand = derive_alpha_tables(BetaSchedule(T=5, beta=np.array([0.1, 0.2, 0.3, 0.4, 0.5])), label="hand_T5")

        self.balanced = build_balanced_gamma(self.log_linear)
        self.balanced_sd = build_balanced_gamma(self.scaled_linear)
        self.balanced_single = build_balanced_gamma(self.single)
        self.balanced_hand = build_balanced_gamma(self.hand)
        self.balanced_sigma2 = build_balanced_gamma(
            derive_alpha_tables(build_log_linear_schedule(200, 0.01, 10.0), sigma0=2.0, label="log_linear_T200_sigma2")
        )

        rng = np.random.default_rng([seed, 7])
        factors = rng.uniform(0.5, 1.5, self.log_linear.T)
        self.unbalanced = with_gamma(self.log_linear, self.balanced.gamma[1:] * factors)
        self.zero_snr = zero_snr_rescale(self.log_linear)


def checks(tables: ReferenceTables, seed: int = 0, draws: int = 100_000) -> List[Tuple[str, Check]]:
    """(name, thunk) pairs in report order."""
    T = tables.log_linear.T
    correlated = XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=1.0, dim=2)
    point = XiSpec(kind=XiKind.DELTA_ZERO, dim=2)
    grid = (1, 50, 100, 200)
    return [
        ("balanced_gamma_T200", lambda: verify_balanced_gamma(tables.balanced, "balanced_gamma_T200")),
        ("balanced_gamma_T1000", lambda: verify_balanced_gamma(tables.balanced_sd, "balanced_gamma_T1000")),
        ("balanced_gamma_T5", lambda: verify_balanced_gamma(tables.balanced_hand, "balanced_gamma_T5")),
        ("psi_T1", lambda: verify_psi_direct_vs_recursive(tables.balanced_single, "psi_T1")),
        ("psi_T200", lambda: verify_psi_direct_vs_recursive(tables.balanced, "psi_T200")),
        ("psi_T1000", lambda: verify_psi_direct_vs_recursive(tables.balanced_sd, "psi_T1000")),
        ("psi_T200_unbalanced", lambda: verify_psi_direct_vs_recursive(tables.unbalanced, "psi_T200_unbalanced")),
        ("lemma1_balanced", lambda: verify_lemma1(tables.balanced, seed=seed, name="lemma1_balanced")),
        ("lemma1_unbalanced", lambda: verify_lemma1(tables.unbalanced, seed=seed, name="lemma1_unbalanced")),
        ("posterior_bayes_balanced",
         lambda: verify_posterior_bayes(tables.balanced, seed=seed, name="posterior_bayes_balanced")),
        ("posterior_bayes_unbalanced",
         lambda: verify_posterior_bayes(tables.unbalanced, seed=seed, name="posterior_bayes_unbalanced")),
        ("marginal_correlated", lambda: verify_marginal_composition(
            tables.balanced, correlated, n=2, draws=draws, t_grid=grid, seed=seed, name="marginal_correlated")),
        ("marginal_delta_zero", lambda: verify_marginal_composition(
            tables.balanced, point, n=2, draws=draws, t_grid=grid, seed=seed, name="marginal_delta_zero")),
        ("marginal_sigma0_2", lambda: verify_marginal_composition(
            tables.balanced_sigma2, correlated, n=2, draws=draws, t_grid=(T,), seed=seed, name="marginal_sigma0_2")),
        ("elbo_l1_tiny_net", lambda: verify_elbo_l1(tables.balanced, n=1, seed=seed, name="elbo_l1_tiny_net")),
        ("elbo_l1_zero_net", lambda: verify_elbo_l1(tables.balanced, net=zero_net, n=1, seed=seed,
                                                    name="elbo_l1_zero_net")),
        ("elbo_l1_xi_zero", lambda: verify_elbo_l1(tables.balanced, n=1, sigma_c_sq=0.0, seed=seed,
                                                   name="elbo_l1_xi_zero")),
        ("vpred_balanced", lambda: verify_vpred_identities(tables.balanced, seed=seed, name="vpred_balanced")),
        ("vpred_zero_snr", lambda: verify_vpred_identities(tables.zero_snr, seed=seed, name="vpred_zero_snr")),
        ("ddpm_reduction", lambda: verify_ddpm_reduction(seed=seed)),
        ("terminal_gap_T200", lambda: terminal_moment_gap(tables.balanced, name="terminal_gap_T200")),
        ("terminal_gap_T1000", lambda: terminal_moment_gap(tables.balanced_sd, name="terminal_gap_T1000")),
    ]


def run_verification(seed: int = 0, draws: int = 100_000) -> List[VerifyReport]:
    """
    Run all checks; every report carries ``seed`` for replay.

    A check that raises is recorded as a failure instead of aborting the run.
    """
    tables = ReferenceTables(seed)
    reports: List[VerifyReport] = []
    for name, check in checks(tables, seed=seed, draws=draws):
        try:
            report = check()
        except Exception as e:
            logger.error("Verification check raised", extra={"check": name}, exc_info=True)
            report = VerifyReport(check=name, status="fail", error=float("inf"), tolerance=0.0,
                                  detail=f"{type(e).__name__}: {e}")
        if report.seed is None:
            report = report.model_copy(update={"seed": seed})
        logger.info(
            "Verification check finished",
            extra={"check": report.check, "status": report.status.value, "error": report.error},
        )
        reports.append(report)
    return reports


def write_report(reports: List[VerifyReport], path: Path) -> Path:
    """Write the reports as a JSON document with a pass/fail summary."""
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "passed": all(r.passed for r in reports),
        "checks": [r.model_dump(mode="json") for r in reports],
    }
    path.write_text(json.dumps(document, indent=2, allow_nan=True) + "\n", encoding="utf-8")
    return path
