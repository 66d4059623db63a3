"""
Process settings for the Choquard solver.

This module handles the environment variables that steer logging and output
placement, using pydantic-settings for validation. Problem configuration
files live in ``src.run_config``.
"""

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


class Settings(BaseSettings):
    """Process-level settings with validation."""

    model_config = SettingsConfigDict(
        env_prefix="CHOQUARD_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Configuration
    log_level: str = Field(default="INFO")
    environment: str = Field(default="development")

    # Output Configuration
    output_root: str = Field(default="runs")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        if v.lower() not in ("development", "production"):
            raise ValueError("Environment must be 'development' or 'production'")
        return v.lower()


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get the global settings instance."""
    return settings


def is_production() -> bool:
    """Check if running in production environment."""
    return settings.environment == "production"


def is_development() -> bool:
    """Check if running in development environment."""
    return settings.environment == "development"
