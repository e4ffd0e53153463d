"""Environment settings."""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class DuinSettings(BaseSettings):
    """Process-level settings read from ``DUIN_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="DUIN_",
        case_sensitive=False,
        extra="ignore",
    )

    threads: int = Field(default=1, ge=1, description="torch intra-op threads; 1 is deterministic")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", description="Logging level"
    )


def get_settings() -> DuinSettings:
    return DuinSettings()
