"""Application settings loaded from the environment and an optional .env file"""
from typing import Tuple
from pydantic import field_validator
from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime defaults for the estimators, the solver and the Monte Carlo harness"""

    # App Configuration
    APP_NAME: str = "Bayes Hurst"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "console"  # console or json

    # Transform defaults (levels use the finest = J-1 convention)
    DEFAULT_WAVELET: str = "haar"
    DEFAULT_DEPTH: int = 8
    DEFAULT_LEVELS: str = "4:6"
    DEFAULT_ESS_FRACTION: float = 0.5

    # MAP solver
    SOLVER_COARSE_STEP: float = 1e-4
    SOLVER_REFINE_TOLERANCE: float = 1e-7
    SOLVER_H_MIN: float = 1e-7
    SOLVER_H_MAX: float = 1.0 - 1e-7

    # Harness parallelism
    HURST_WORKERS: int = 1

    # Evaluation output
    RESULTS_DIR: str = "./data/evaluation_results"

    @field_validator("LOG_FORMAT")
    def check_log_format(cls, v):
        if v not in ("console", "json"):
            raise ValueError("LOG_FORMAT must be 'console' or 'json'")
        return v

    @field_validator("HURST_WORKERS")
    def check_workers(cls, v):
        if v < 1:
            raise ValueError("HURST_WORKERS must be at least 1")
        return v

    @property
    def default_levels(self) -> Tuple[int, int]:
        """Get DEFAULT_LEVELS as a (j1, j2) pair"""
        first, _, last = self.DEFAULT_LEVELS.partition(":")
        return int(first), int(last or first)

    def ensure_directories(self):
        """Create necessary directories if they don't exist"""
        Path(self.RESULTS_DIR).mkdir(parents=True, exist_ok=True)

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )


# Global settings instance
settings = Settings()
