"""
Lab configuration and settings.
"""

from typing import List, Tuple

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Lab settings with environment variable support (prefix ``STABILITY_LAB_``)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="STABILITY_LAB_",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_format: str = "text"

    # Numerics
    normalization_tolerance: float = 1e-12
    comparison_tolerance: float = 1e-9
    precision_ladder: str = "40,80,160,320,640"

    # Monte Carlo
    confidence_level: float = 0.99
    default_trials: int = 1000
    mc_shard_size: int = 250

    # Game solving
    mw_gap: float = 1e-3
    mw_checkpoint_every: int = 200

    # Learners and boosting
    rejection_draw_cap: int = 100_000
    rejection_cap_factor: int = 64
    resample_cap_factor: int = 64

    # Mixtures
    truncation_factor: int = 2

    # Reports
    log_base: str = "nats"
    output_directory: str = "./reports"

    @property
    def precision_steps(self) -> Tuple[int, ...]:
        """Decimal precisions tried, in order, when deciding an exact comparison."""
        return tuple(int(step.strip()) for step in self.precision_ladder.split(",") if step.strip())

    @property
    def log_formats(self) -> List[str]:
        return ["json", "text"]


# Global settings instance
settings = Settings()
