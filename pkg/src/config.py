from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

PROJECT_ROOT = Path(__file__).resolve().parent.parent


class SettingsValidationError(ValueError):
    """Raised when runtime settings are out of range or point at missing files."""


class Settings(BaseSettings):
    """Engine and CLI settings, read from SPARSEBOUNDS_* variables and .env."""

    model_config = SettingsConfigDict(
        env_prefix="SPARSEBOUNDS_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    environment: Literal["development", "test", "production"] = "development"

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Reproducibility
    default_seed: int = 0

    # Numerical budgets
    bruteforce_cap: int = 10**6
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 10_000
    packing_attempts_factor: int = 100

    # Reference rates and Monte Carlo
    reference_c0: float = 1.0
    failure_tolerance: float = 0.01

    # Experiment recipes
    recipes_dir: Path = PROJECT_ROOT / "recipes"

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v):
        return str(v).upper()

    def validate_runtime(self) -> None:
        """Collect every out-of-range setting and raise once."""
        errors: list[str] = []

        if self.log_level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            errors.append(f"LOG_LEVEL {self.log_level!r} is not a logging level.")
        if self.default_seed < 0:
            errors.append("DEFAULT_SEED must be non-negative.")
        for name in ("bruteforce_cap", "lasso_max_iter", "packing_attempts_factor"):
            if getattr(self, name) < 1:
                errors.append(f"{name.upper()} must be a positive integer.")
        if not self.lasso_tol > 0:
            errors.append("LASSO_TOL must be positive.")
        if not self.reference_c0 > 0:
            errors.append("REFERENCE_C0 must be positive.")
        if not 0 <= self.failure_tolerance < 1:
            errors.append("FAILURE_TOLERANCE must lie in [0, 1).")
        if not self.recipes_dir.is_dir():
            errors.append(f"RECIPES_DIR {self.recipes_dir} does not exist.")

        if errors:
            raise SettingsValidationError("Invalid configuration: " + " ".join(errors))


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
