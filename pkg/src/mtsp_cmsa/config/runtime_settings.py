"""Runtime settings read from the environment."""
import logging
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class RuntimeSettings(BaseSettings):
    """
    Process-level settings with the MTSP_ prefix, e.g. MTSP_LOG_LEVEL=DEBUG.
    """
    log_level: str = Field(default="INFO", description="Root logging level")
    log_format: str = Field(
        default="%(asctime)s %(levelname)s %(name)s: %(message)s",
        description="logging format string",
    )

    model_config = SettingsConfigDict(
        env_prefix="MTSP_",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache()
def get_runtime_settings() -> RuntimeSettings:
    return RuntimeSettings()


def configure_logging(settings: RuntimeSettings) -> None:
    """
    Configure root logging once for CLI invocations.

    Args:
        settings: Runtime settings holding level and format
    """
    level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=settings.log_format, force=True)
