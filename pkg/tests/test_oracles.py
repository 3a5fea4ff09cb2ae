"""
Independent derivation checks.
"""
import json

import numpy as np
import pytest

from src.app.exceptions import ScheduleError
from src.app.oracles.balanced import solve_balanced_gamma, verify_balanced_gamma
from src.app.oracles.ddpm_reference import verify_ddpm_reduction
from src.app.oracles.elbo_l1 import verify_elbo_l1, zero_net
from src.app.oracles.lemma1 import verify_lemma1
from src.app.oracles.marginal import verify_marginal_composition
from src.app.oracles.posterior_bayes import verify_posterior_bayes
from src.app.oracles.psi_recursion import verify_psi_direct_vs_recursive
from src.app.oracles.runner import run_verification, write_report
from src.app.oracles.terminal_gap import terminal_moment_gap
from src.app.oracles.vpred import verify_vpred_identities
from src.app.services.schedule import with_gamma, zero_snr_rescale
from src.schemas.metrics import CheckStatus


@pytest.fixture(scope="module")
def unbalanced_tables(plain_tables, balanced_tables):
    factors = np.random.default_rng(5).uniform(0.5, 1.5, plain_tables.T)
    return with_gamma(plain_tables, balanced_tables.gamma[1:] * factors)


class TestBalancedOracle:

    def test_direct_solve_matches_tables(self, balanced_tables):
        expected = solve_balanced_gamma(balanced_tables.alpha, balanced_tables.alpha_bar)
        np.testing.assert_allclose(balanced_tables.gamma[1:], expected[1:], rtol=1e-10)

    def test_passes_on_balanced(self, balanced_tables, balanced_sd_tables):
        assert verify_balanced_gamma(balanced_tables).status == CheckStatus.PASS
        assert verify_balanced_gamma(balanced_sd_tables).status == CheckStatus.PASS

    def test_fails_on_unbalanced(self, unbalanced_tables):
        assert verify_balanced_gamma(unbalanced_tables).status == CheckStatus.FAIL


class TestIdentityOracles:

    def test_psi_recursion(self, balanced_tables, unbalanced_tables):
        assert verify_psi_direct_vs_recursive(balanced_tables).passed
        assert verify_psi_direct_vs_recursive(unbalanced_tables).passed

    def test_lemma1(self, balanced_tables, unbalanced_tables):
        assert verify_lemma1(balanced_tables, seed=1).passed
        assert verify_lemma1(unbalanced_tables, seed=1).passed

    def test_posterior_bayes(self, balanced_tables, unbalanced_tables):
        assert verify_posterior_bayes(balanced_tables, seed=2).passed
        assert verify_posterior_bayes(unbalanced_tables, seed=2).passed

    def test_vpred_on_balanced_and_zero_snr(self, plain_tables, balanced_tables):
        assert verify_vpred_identities(balanced_tables, seed=3).passed
        assert verify_vpred_identities(zero_snr_rescale(plain_tables), seed=3).passed

    def test_vpred_rejects_unbalanced(self, unbalanced_tables):
        with pytest.raises(ScheduleError):
            verify_vpred_identities(unbalanced_tables)

    @pytest.mark.parametrize("sigma_c_sq", [0.0, 1.0])
    def test_elbo_l1(self, balanced_tables, sigma_c_sq):
        assert verify_elbo_l1(balanced_tables, sigma_c_sq=sigma_c_sq).passed
        assert verify_elbo_l1(balanced_tables, net=zero_net, sigma_c_sq=sigma_c_sq).passed


class TestSamplingOracles:

    def test_marginal_composition(self, balanced_tables, correlated_spec):
        report = verify_marginal_composition(balanced_tables, correlated_spec, n=2, draws=10_000,
                                             t_grid=(1, 100, 200), seed=0)
        assert report.passed
        assert report.samples == 10_000

    def test_ddpm_reduction_is_exact(self):
        report = verify_ddpm_reduction(seed=0, pairs=200, samples=20, T=50)
        assert report.status == CheckStatus.PASS
        assert report.error == 0.0

    def test_terminal_gap_is_informational(self, balanced_tables):
        report = terminal_moment_gap(balanced_tables)
        assert report.status == CheckStatus.INFO
        assert report.passed
        assert report.error > 0


class TestRunner:

    def test_all_checks_pass(self, tmp_path):
        reports = run_verification(seed=0, draws=10_000)
        failed = [r.check for r in reports if not r.passed]
        assert failed == []
        assert all(r.seed == 0 for r in reports)

        path = write_report(reports, tmp_path / "report.json")
        document = json.loads(path.read_text())
        assert document["passed"] is True
        assert len(document["checks"]) == len(reports)
