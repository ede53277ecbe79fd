"""Application configuration from YAML file."""
import os
import yaml
from functools import lru_cache
from pydantic import BaseModel, Field
from typing import Optional


class AppConfig(BaseModel):
    """Solver runtime configuration from config.yaml."""

    subsolver_time_cap_seconds: float = Field(
        default=2.0, gt=0, description="Upper cap on a single Solve call in seconds"
    )
    subsolver_budget_fraction: float = Field(
        default=0.1,
        gt=0,
        le=1,
        description="Fraction of the remaining run budget a Solve call may use",
    )
    stagnation_window_seconds: float = Field(
        default=10.0, gt=0, description="Sliding window for the convergence proxy"
    )
    stagnation_min_iterations: int = Field(
        default=5, ge=2, description="Minimum proxy samples inside the window"
    )
    stagnation_threshold: float = Field(
        default=1e-3, gt=0, description="Max-min proxy spread that counts as stagnation"
    )
    stagnation_window_iterations: int = Field(
        default=20,
        ge=2,
        description="Window length in iterations when a run is iteration-capped",
    )
    construct_workers: int = Field(
        default=1, ge=1, description="Processes used for the Construct phase"
    )
    bench_workers: int = Field(
        default=1, ge=1, description="Processes used for bench cells"
    )
    round_tsplib_distances: bool = Field(
        default=False, description="Round TSPLIB distances to the nearest integer"
    )

    @classmethod
    def from_yaml(cls, config_path: Optional[str] = None) -> "AppConfig":
        """
        Load application configuration from YAML file.

        Args:
            config_path: Path to config.yaml file. If None, uses CONFIG_PATH env var
                        or defaults to ./config.yaml

        Returns:
            AppConfig instance
        """
        if config_path is None:
            config_path = os.getenv("CONFIG_PATH", "config.yaml")

        # If file doesn't exist, return default config
        if not os.path.exists(config_path):
            return cls()

        try:
            with open(config_path, "r") as f:
                config_data = yaml.safe_load(f) or {}
        except (FileNotFoundError, yaml.YAMLError, PermissionError):
            return cls()

        # YAML keys are UPPER_SNAKE, fields are lower_snake
        values = {
            key.lower(): value
            for key, value in config_data.items()
            if key.lower() in cls.model_fields
        }
        return cls(**values)


@lru_cache()
def get_app_config() -> AppConfig:
    """
    Get cached application configuration.

    Returns:
        AppConfig instance
    """
    return AppConfig.from_yaml()
