"""
Application settings and configuration.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"

    # Storage
    DATA_DIR: str = "data"
    RUNS_DIR: str = "runs"

    # Experiments
    DEFAULT_PROFILE: str = "desk"

    # CLI
    APP_TITLE: str = "offset-diffusion"
    APP_VERSION: str = "1.0.0"
    APP_DESCRIPTION: str = """
    Discrete-time diffusion toolkit with auxiliary noise.

    Builds balanced coefficient schedules, trains epsilon- and v-prediction
    denoisers on the Cylinder dataset, and evaluates generated samples with
    1-Wasserstein distance, MMD and brightness uniformity.
    """

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")


settings = Settings()
