"""
Auxiliary-noise sampling.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from src.app.services.xi_noise import is_zero, sample_xi, sample_xi_batch, sample_xi_scalars
from src.models.variant import XiKind
from src.schemas.config import XiSpec


class TestXiNoise:

    def test_delta_zero_is_zero_and_draws_nothing(self, point_spec):
        rng = np.random.default_rng(0)
        before = rng.bit_generator.state
        xi = sample_xi_batch(point_spec, rng, 5)
        assert xi.shape == (5, 2)
        assert not xi.any()
        assert rng.bit_generator.state == before

    def test_zero_variance_counts_as_point_mass(self):
        spec = XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=0.0, dim=3)
        assert is_zero(spec)
        assert not sample_xi(spec, np.random.default_rng(0)).any()

    def test_components_are_equal(self):
        """Covariance sigma_c^2 1_{n x n} puts every draw on the diagonal."""
        spec = XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=0.5, dim=4)
        xi = sample_xi_batch(spec, np.random.default_rng(1), 100)
        np.testing.assert_array_equal(xi, np.repeat(xi[:, :1], 4, axis=1))

    def test_scalar_is_scaled_normal(self):
        spec = XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=0.49, dim=2)
        z = np.random.default_rng(7).standard_normal(3)
        np.testing.assert_array_equal(sample_xi_scalars(spec, np.random.default_rng(7), 3), z * np.sqrt(0.49))

    def test_covariance(self):
        spec = XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=2.0, dim=2)
        xi = sample_xi_batch(spec, np.random.default_rng(2), 100_000)
        cov = np.cov(xi, rowvar=False)
        np.testing.assert_allclose(cov, 2.0 * np.ones((2, 2)), atol=0.06)
        np.testing.assert_allclose(xi.mean(axis=0), 0.0, atol=0.03)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValidationError):
            XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=-1.0, dim=2)
