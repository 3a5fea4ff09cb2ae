"""
Shared fixtures: reference schedules and a tiny float64 network.
"""
import numpy as np
import pytest

from src.app.services.denoiser import init_params
from src.app.services.schedule import (
    build_balanced_gamma,
    build_log_linear_schedule,
    build_scaled_linear_schedule,
    derive_alpha_tables,
)
from src.models.variant import XiKind
from src.schemas.config import XiSpec


@pytest.fixture(scope="session")
def plain_tables():
    """Log-linear T=200 tables without a gamma column."""
    return derive_alpha_tables(build_log_linear_schedule(200, 0.01, 10.0), label="log_linear")


@pytest.fixture(scope="session")
def balanced_tables(plain_tables):
    return build_balanced_gamma(plain_tables)


@pytest.fixture(scope="session")
def balanced_sd_tables():
    """Scaled-linear T=1000 tables with balanced gamma."""
    return build_balanced_gamma(derive_alpha_tables(build_scaled_linear_schedule(1000), label="scaled_linear"))


@pytest.fixture
def tiny_net():
    """n=2 network with two 4-unit hidden layers in float64."""
    return init_params(2, embed_dim=4, seed=3, hidden_dims=(4, 4), T=200, dtype=np.float64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def correlated_spec():
    return XiSpec(kind=XiKind.CORRELATED_GAUSSIAN, sigma_c_sq=1.0, dim=2)


@pytest.fixture
def point_spec():
    return XiSpec(kind=XiKind.DELTA_ZERO, dim=2)
