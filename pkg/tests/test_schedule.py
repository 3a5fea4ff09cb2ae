"""
Schedule construction: beta schedules, coefficient tables, balanced gamma
and zero-SNR rescaling.
"""
import numpy as np
import pytest

from src.app.exceptions import DegenerateScheduleError, ScheduleError
from src.app.services.schedule import (
    SCHEDULE_COLUMNS,
    balanced_gamma_hat,
    build_balanced_gamma,
    build_log_linear_schedule,
    build_scaled_linear_schedule,
    build_tables,
    derive_alpha_tables,
    schedule_hash,
    schedule_rows,
    with_gamma,
    zero_snr_rescale,
)
from src.models.schedule import BetaSchedule
from src.models.variant import GammaSource, ScheduleKind
from src.schemas.config import ScheduleConfig


class TestBetaSchedules:

    def test_log_linear_single_step(self):
        """T=1 with sigma 1 gives alpha_bar 0.5 and beta 0.5."""
        tables = derive_alpha_tables(build_log_linear_schedule(1, 1.0, 1.0))
        assert tables.alpha_bar[1] == pytest.approx(0.5, abs=1e-15)
        assert tables.beta[1] == pytest.approx(0.5, abs=1e-15)

    def test_log_linear_endpoints(self, plain_tables):
        assert plain_tables.alpha_bar[1] == pytest.approx(1.0 / (1.0 + 0.01 ** 2), rel=1e-12)
        assert plain_tables.alpha_bar[200] == pytest.approx(1.0 / 101.0, rel=1e-12)

    def test_alpha_bar_is_decreasing(self, plain_tables):
        assert np.all(np.diff(plain_tables.alpha_bar) < 0)

    def test_scaled_linear_endpoints(self):
        bs = build_scaled_linear_schedule(1000)
        assert bs.beta[1] == pytest.approx(0.00085, rel=1e-12)
        assert bs.beta[1000] == pytest.approx(0.012, rel=1e-12)

    def test_sentinel_row(self, plain_tables):
        assert plain_tables.beta[0] == 0.0
        assert plain_tables.alpha[0] == 1.0
        assert plain_tables.alpha_bar[0] == 1.0

    @pytest.mark.parametrize("T, lo, hi", [(0, 0.01, 10.0), (10, 0.0, 1.0), (10, 2.0, 1.0)])
    def test_invalid_log_linear_rejected(self, T, lo, hi):
        with pytest.raises(ScheduleError):
            build_log_linear_schedule(T, lo, hi)

    @pytest.mark.parametrize("beta", [[0.1, 1.0], [0.0, 0.2], [0.1, np.nan]])
    def test_betas_outside_unit_interval_rejected(self, beta):
        with pytest.raises(ScheduleError):
            derive_alpha_tables(BetaSchedule(T=2, beta=np.array(beta)))

    def test_nonpositive_sigma0_rejected(self):
        with pytest.raises(ScheduleError):
            derive_alpha_tables(build_log_linear_schedule(5, 0.1, 1.0), sigma0=0.0)


class TestCoefficientTables:

    def test_lambda_eps_single_step(self):
        """beta = [0.5] gives lambda_eps_1 = 1."""
        tables = derive_alpha_tables(BetaSchedule(T=1, beta=np.array([0.5])))
        assert tables.lambda_eps[1] == pytest.approx(1.0, rel=1e-12)

    def test_lambda_v_relation(self, plain_tables, rng):
        """lambda_v_t = alpha_bar_{t-1} alpha_t lambda_eps_t."""
        for t in rng.integers(1, plain_tables.T + 1, size=10):
            expected = plain_tables.alpha_bar[t - 1] * plain_tables.alpha[t] * plain_tables.lambda_eps[t]
            assert plain_tables.lambda_v[t] == pytest.approx(expected, rel=1e-12)

    def test_undefined_entries_are_nan(self, plain_tables):
        assert np.isnan(plain_tables.nu[:2]).all()
        assert np.isnan(plain_tables.beta_tilde[:2]).all()
        assert np.isnan(plain_tables.lambda_eps[0])
        assert np.isfinite(plain_tables.beta_tilde[2:]).all()

    def test_reverse_variance_is_beta(self, plain_tables):
        np.testing.assert_array_equal(plain_tables.sigma_rev_sq, plain_tables.beta)

    def test_plain_tables_have_no_gamma(self, plain_tables):
        assert plain_tables.gamma_source == GammaSource.NONE
        assert not plain_tables.gamma.any()
        assert plain_tables.max_abs_nu() == 0.0

    def test_tables_are_read_only(self, plain_tables):
        with pytest.raises(ValueError):
            plain_tables.beta[1] = 0.3

    def test_gamma_length_checked(self, plain_tables):
        with pytest.raises(ScheduleError):
            with_gamma(plain_tables, np.ones(7))

    def test_gamma_scaling_is_linear(self, plain_tables, balanced_tables):
        """Scaling gamma by C scales phi, psi and nu by C."""
        factors = np.random.default_rng(11).uniform(0.5, 1.5, plain_tables.T)
        gamma = balanced_tables.gamma[1:] * factors
        base = with_gamma(plain_tables, gamma)
        for C in (0.5, 2.0, 10.0):
            scaled = with_gamma(plain_tables, C * gamma)
            np.testing.assert_allclose(scaled.phi, C * base.phi, rtol=1e-12, atol=0)
            np.testing.assert_allclose(scaled.psi, C * base.psi, rtol=1e-12, atol=0)
            np.testing.assert_allclose(scaled.nu[2:], C * base.nu[2:], rtol=1e-9, atol=1e-12)


class TestBalancedGamma:

    def test_phi_equals_psi(self, balanced_tables):
        np.testing.assert_allclose(balanced_tables.phi[1:], balanced_tables.psi[1:], rtol=1e-10, atol=1e-12)

    def test_psi_T_is_one(self, balanced_tables, balanced_sd_tables):
        assert balanced_tables.psi[balanced_tables.T] == pytest.approx(1.0, abs=1e-10)
        assert balanced_sd_tables.psi[balanced_sd_tables.T] == pytest.approx(1.0, abs=1e-10)

    def test_nu_vanishes(self, balanced_tables, balanced_sd_tables):
        assert balanced_tables.max_abs_nu() < 1e-9
        assert balanced_sd_tables.max_abs_nu() < 1e-9

    def test_single_step(self):
        """For T=1, gamma_1 = sqrt(1 - alpha_1) / sqrt(alpha_1)."""
        tables = build_balanced_gamma(derive_alpha_tables(build_log_linear_schedule(1, 1.0, 1.0)))
        alpha = tables.alpha[1]
        assert tables.gamma[1] == pytest.approx(np.sqrt(1.0 - alpha) / np.sqrt(alpha), rel=1e-12)
        assert tables.psi[1] == pytest.approx(1.0, rel=1e-12)

    def test_normalization_commutes_with_start_value(self, plain_tables):
        """The un-normalized recursion is linear in its starting value."""
        g1, _, psi1 = balanced_gamma_hat(plain_tables, 1.0)
        g3, _, psi3 = balanced_gamma_hat(plain_tables, 3.0)
        np.testing.assert_allclose(g3 / psi3[-1], g1 / psi1[-1], rtol=1e-12)

    def test_gamma_is_positive(self, balanced_tables):
        assert np.all(balanced_tables.gamma[1:] > 0)
        assert balanced_tables.gamma_source == GammaSource.BALANCED

    def test_zero_snr_tables_are_degenerate(self, plain_tables):
        with pytest.raises(DegenerateScheduleError):
            build_balanced_gamma(zero_snr_rescale(plain_tables))


class TestZeroSNR:

    def test_terminal_and_first_entries(self, plain_tables):
        rescaled = zero_snr_rescale(plain_tables)
        assert rescaled.alpha_bar[rescaled.T] == 0.0
        assert rescaled.alpha_bar[1] == plain_tables.alpha_bar[1]
        assert rescaled.beta[rescaled.T] == pytest.approx(1.0)
        assert rescaled.zero_snr

    def test_monotone(self, plain_tables):
        rescaled = zero_snr_rescale(plain_tables)
        assert np.all(np.diff(rescaled.alpha_bar) <= 0)

    def test_idempotent(self, plain_tables):
        once = zero_snr_rescale(plain_tables)
        twice = zero_snr_rescale(once)
        np.testing.assert_allclose(twice.alpha_bar, once.alpha_bar, rtol=1e-12, atol=0)

    def test_nu_is_zero(self, plain_tables):
        rescaled = zero_snr_rescale(plain_tables)
        assert rescaled.gamma_source == GammaSource.NONE
        assert rescaled.max_abs_nu() == 0.0

    def test_single_step_rejected(self):
        with pytest.raises(ScheduleError):
            zero_snr_rescale(derive_alpha_tables(build_log_linear_schedule(1, 1.0, 1.0)))

    def test_tables_with_gamma_rejected(self, balanced_tables):
        with pytest.raises(ScheduleError):
            zero_snr_rescale(balanced_tables)


class TestBuildTables:

    def test_balanced_flag(self):
        tables = build_tables(ScheduleConfig(T=50, balanced=True))
        assert tables.balanced
        assert tables.T == 50

    def test_zero_snr_flag(self):
        tables = build_tables(ScheduleConfig(T=50, zero_snr=True))
        assert tables.zero_snr
        assert tables.alpha_bar[50] == 0.0

    def test_scaled_linear_kind(self):
        tables = build_tables(ScheduleConfig(kind=ScheduleKind.SCALED_LINEAR, T=100))
        assert tables.beta[1] == pytest.approx(0.00085, rel=1e-12)

    def test_hash_is_stable_and_sensitive(self, plain_tables, balanced_tables):
        again = derive_alpha_tables(build_log_linear_schedule(200, 0.01, 10.0))
        assert schedule_hash(again) == schedule_hash(plain_tables)
        assert schedule_hash(balanced_tables) != schedule_hash(plain_tables)
        assert len(schedule_hash(plain_tables)) == 16

    def test_rows(self, balanced_tables):
        rows = schedule_rows(balanced_tables)
        assert len(rows) == balanced_tables.T
        assert tuple(rows[0]) == SCHEDULE_COLUMNS
        assert rows[-1]["t"] == balanced_tables.T
        assert rows[-1]["psi"] == pytest.approx(1.0, abs=1e-10)
