"""
Forward marginals, posteriors and the reverse-mean parameterizations.
"""
import numpy as np
import pytest

from src.app.exceptions import ProcessError, UnsupportedCombinationError
from src.app.services.process import (
    eps_from_v,
    forward_marginal,
    forward_step,
    marginal_moments,
    mu_from_eps,
    mu_from_v,
    posterior_params,
    reverse_init,
    v_from_eps,
    x0_from_v,
)
from src.app.services.schedule import (
    build_balanced_gamma,
    build_log_linear_schedule,
    derive_alpha_tables,
    with_gamma,
    zero_snr_rescale,
)
from src.models.schedule import BetaSchedule


@pytest.fixture
def hand_tables():
    """T=2 with alpha_2 = 0.9 and alpha_bar_2 = 0.5."""
    return derive_alpha_tables(BetaSchedule(T=2, beta=np.array([4.0 / 9.0, 0.1])))


class TestForward:

    def test_single_step_without_noise(self):
        tables = with_gamma(derive_alpha_tables(BetaSchedule(T=1, beta=np.array([0.01]))), [0.02])
        x = forward_step(np.array([1.0]), np.array([1.0]), 1, tables, eps=np.zeros(1))
        assert x[0] == pytest.approx(np.sqrt(0.99) * 1.02, rel=1e-12)

    def test_chained_means_match_marginal(self, balanced_tables):
        """Noise-free steps compose to sqrt(ab) x0 + sqrt(1 - ab) psi xi."""
        x0 = np.array([0.3, -1.2])
        xi = np.array([0.8, 0.8])
        x = x0.copy()
        for t in range(1, balanced_tables.T + 1):
            x = forward_step(x, xi, t, balanced_tables, eps=np.zeros(2))
            if t in (1, 7, 100, 200):
                mean, _ = marginal_moments(x0, xi, t, balanced_tables)
                np.testing.assert_allclose(x, mean, rtol=1e-10, atol=1e-12)

    def test_marginal_with_zero_noise_is_mean(self, balanced_tables):
        x0 = np.array([[1.0, 2.0], [-0.5, 0.0]])
        xi = np.full((2, 2), 0.7)
        t = np.array([3, 150])
        x_t = forward_marginal(x0, xi, t, balanced_tables, eps=np.zeros((2, 2)))
        mean, var = marginal_moments(x0, xi, t, balanced_tables)
        np.testing.assert_allclose(x_t, mean, rtol=1e-14)
        np.testing.assert_allclose(np.ravel(var), 1.0 - balanced_tables.alpha_bar[t])

    @pytest.mark.parametrize("t", [0, 201, 1.5])
    def test_timestep_out_of_range(self, balanced_tables, t):
        with pytest.raises(ProcessError):
            forward_marginal(np.zeros(2), np.zeros(2), t, balanced_tables, eps=np.zeros(2))

    def test_noise_source_required(self, balanced_tables):
        with pytest.raises(ProcessError):
            forward_step(np.zeros(2), np.zeros(2), 1, balanced_tables)

    def test_forced_noise_shape_checked(self, balanced_tables):
        with pytest.raises(ProcessError):
            forward_step(np.zeros(2), np.zeros(2), 1, balanced_tables, eps=np.zeros(3))


class TestPosterior:

    def test_t1_rejected(self, balanced_tables):
        with pytest.raises(ProcessError):
            posterior_params(np.zeros(2), np.zeros(2), np.zeros(2), 1, balanced_tables)

    def test_variance_is_beta_tilde(self, balanced_tables):
        _, var = posterior_params(np.zeros(2), np.zeros(2), np.zeros(2), 17, balanced_tables)
        assert var == balanced_tables.beta_tilde[17]

    def test_without_xi_matches_plain_posterior(self, plain_tables):
        t = 40
        a, ab, ab_prev = plain_tables.alpha[t], plain_tables.alpha_bar[t], plain_tables.alpha_bar[t - 1]
        x_t, x0 = np.array([0.4]), np.array([-1.0])
        mu, _ = posterior_params(x_t, x0, np.zeros(1), t, plain_tables)
        expected = np.sqrt(ab_prev) * (1 - a) / (1 - ab) * x0 + np.sqrt(a) * (1 - ab_prev) / (1 - ab) * x_t
        np.testing.assert_allclose(mu, expected, rtol=1e-12)


class TestReverseMean:

    def test_mu_from_eps_hand_value(self, hand_tables):
        mu = mu_from_eps(np.array([1.0]), np.array([1.0]), 2, hand_tables)
        expected = 1.0 / np.sqrt(0.9) - 0.1 / (np.sqrt(0.5) * np.sqrt(0.9))
        assert mu[0] == pytest.approx(expected, rel=1e-12)

    def test_one_step_inversion(self):
        """At T=1 the exact noise recovers x0 from x1."""
        tables = build_balanced_gamma(derive_alpha_tables(build_log_linear_schedule(1, 1.0, 1.0)))
        x0, eps0, xi = np.array([0.7, -1.3]), np.array([0.2, 1.1]), np.array([-0.4, -0.4])
        x1 = forward_marginal(x0, xi, 1, tables, eps=eps0)
        eps_hat = tables.sigma0 * eps0 + tables.phi[1] * xi
        np.testing.assert_allclose(mu_from_eps(x1, eps_hat, 1, tables), x0, atol=1e-6)

    def test_eps_rejected_on_zero_snr(self, plain_tables):
        with pytest.raises(UnsupportedCombinationError):
            mu_from_eps(np.zeros(2), np.zeros(2), 5, zero_snr_rescale(plain_tables))

    def test_v_finite_at_zero_snr_terminal(self, plain_tables):
        tables = zero_snr_rescale(plain_tables)
        mu = mu_from_v(np.ones(2), np.ones(2), tables.T, tables)
        assert np.all(np.isfinite(mu))

    @pytest.mark.parametrize("t", [1, 2, 50, 200])
    def test_v_and_eps_means_agree(self, plain_tables, t, rng):
        """With consistent (x0, eps) both parameterizations give the same mean."""
        x0, eps = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        ab = plain_tables.alpha_bar[t]
        x_t = np.sqrt(ab) * x0 + np.sqrt(1 - ab) * eps
        v = np.sqrt(ab) * eps - np.sqrt(1 - ab) * x0
        np.testing.assert_allclose(mu_from_v(x_t, v, t, plain_tables), mu_from_eps(x_t, eps, t, plain_tables),
                                   rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(x0_from_v(x_t, v, t, plain_tables), x0, atol=1e-9)

    def test_conversions_invert_each_other(self, plain_tables, rng):
        x_t, eps = rng.standard_normal((5, 2)), rng.standard_normal((5, 2))
        t = np.array([1, 10, 60, 120, 200])
        v = v_from_eps(x_t, eps, t, plain_tables)
        np.testing.assert_allclose(eps_from_v(x_t, v, t, plain_tables), eps, atol=1e-9)


class TestReverseInit:

    def test_delta_zero_start(self, balanced_tables, point_spec, rng):
        x_T, xi = reverse_init(point_spec, balanced_tables, rng, size=20_000)
        assert x_T.shape == (20_000, 2)
        assert not xi.any()
        np.testing.assert_allclose(x_T.mean(axis=0), 0.0, atol=0.05)
        np.testing.assert_allclose(x_T.std(axis=0), 1.0, atol=0.05)

    def test_single_draw_is_a_vector(self, balanced_tables, correlated_spec, rng):
        x_T, xi = reverse_init(correlated_spec, balanced_tables, rng)
        assert x_T.shape == (2,)
        assert xi[0] == xi[1]
