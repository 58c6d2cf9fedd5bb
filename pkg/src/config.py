"""
Runtime configuration using pydantic-settings.
Loads from environment variables with .env file support.
"""

from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""
    
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )
    
    # Application
    debug: bool = False
    environment: str = "development"
    log_level: str = "INFO"  # DEBUG, INFO, WARNING, ERROR
    version: str = "1.0.0"

    # Numerical conditioning
    jitter_rel: float = 1e-9          # first jitter, relative to mean diagonal
    jitter_growth: float = 10.0
    jitter_retries: int = 3
    pivot_floor_rel: float = 1e-13    # min accepted squared Cholesky pivot
    inverse_drift_tol: float = 1e-6   # ||A A^-1 - I||_inf before refactorizing

    # Harness
    synth_cell_cap: int = 4096        # sampling a prior draw is cubic in cells


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
