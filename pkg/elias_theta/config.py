"""
Application Configuration

This module handles all configuration settings for the library and CLI using pydantic-settings.
Configuration can be loaded from environment variables (prefix ``ELIAS_THETA_``) or a .env file.

Key Settings:
- SEED: Base seed for every randomized routine (runs are deterministic by default)
- RESTARTS: Random restarts per theta optimization
- FEAS_TOL: Largest constraint violation a certificate may carry
- THREADS: Worker threads for restarts, per-input subproblems and code enumeration
"""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Settings loaded from environment variables.

    Attributes:
        APP_NAME: Name used in CLI help and log records
        LOG_LEVEL: Root log level configured by the CLI
        SEED: Base seed; restart k uses SEED + k
        RESTARTS: Random restarts for optimize_theta / optimize_theta_weighted
        SEARCH_RESTARTS: Random restarts for the weighted subproblems inside V-search
        SEARCH_REFINE_BUDGET: Largest number of transportation moves tried per V-search
        FEAS_TOL: Feasibility tolerance a certificate must meet to be valid
        CONV_TOL: Objective change below which a restart is considered converged
        CONV_WINDOW: Iterations over which CONV_TOL is measured
        MAX_ITER: Iteration budget per restart
        THREADS: Worker threads (1 runs everything inline)
        ENUMERATION_GUARD: Largest number of codes the oracle will enumerate
        STATIONARITY_TOL: Tolerance for PV = P
    """

    model_config = SettingsConfigDict(
        env_prefix="ELIAS_THETA_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    APP_NAME: str = "elias-theta"
    LOG_LEVEL: str = "WARNING"

    # Optimizer
    SEED: int = 20131
    RESTARTS: int = 16
    SEARCH_RESTARTS: int = 2
    SEARCH_REFINE_BUDGET: int = 40
    FEAS_TOL: float = 1e-8
    CONV_TOL: float = 1e-10
    CONV_WINDOW: int = 50
    MAX_ITER: int = 20000
    THREADS: int = 1

    # Bounds and verification
    ENUMERATION_GUARD: int = 10**7
    STATIONARITY_TOL: float = 1e-9


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Returns:
        Settings: Settings instance, read from the environment once per process
    """
    return Settings()
