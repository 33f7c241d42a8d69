"""
Core configuration settings for the classifier.
Uses pydantic-settings for type-safe environment variable management.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    app_name: str = "Conformal Reeb Classifier"
    app_version: str = "0.1.0"
    debug: bool = False

    # Tolerances. `tolerance` overrides both backend defaults when set.
    tolerance: float | None = Field(default=None, gt=0)
    frame_tolerance: float = Field(default=1e-10, gt=0)
    grid_tolerance: float = Field(default=1e-8, gt=0)
    grid_reference_n: int = 32

    # Grid backend
    default_grid_n: int = 32
    fft_workers: int = 1
    dealias: bool = False
    product_grid_n: int = 8

    # Pipeline
    stage_timeout_seconds: float = 120.0

    # Orbit scan
    orbit_horizon_periods: float = 50.0
    orbit_threshold: float = 1e-3
    orbit_steps_per_period: int = 100
    orbit_samples_per_axis: int = 2

    model_config = SettingsConfigDict(
        env_prefix="CONFORMAL_REEB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    def tolerance_for(self, backend: str, n: int | None = None) -> float:
        """
        Default tolerance for a backend.

        Args:
            backend: "frame" or "grid"
            n: Grid resolution (grid backend only)

        Returns:
            The base tolerance, scaled linearly with N above the reference resolution on grids.
        """
        if self.tolerance is not None:
            return self.tolerance
        if backend == "frame":
            return self.frame_tolerance
        scale = max(1.0, (n or self.grid_reference_n) / self.grid_reference_n)
        return self.grid_tolerance * scale


# Global settings instance
settings = Settings()
