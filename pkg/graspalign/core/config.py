"""
Configuration module for graspalign.
Handles environment-specific settings using Pydantic v2 and pydantic-settings,
plus the option models every solver accepts.
"""
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Environment(str, Enum):
    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


LOG_LEVELS = {"error": "ERROR", "info": "INFO", "debug": "DEBUG"}


class LoggingSettings(BaseModel):
    level: str = "INFO"
    format: str = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} | {message}"
    serialize: bool = False


class APISettings(BaseModel):
    host: str = "127.0.0.1"
    port: int = 8000
    prefix: str = "/api"
    version: str = "0.1.0"
    title: str = "graspalign"
    description: str = "Geometry and pose estimation of grasped objects from pointmaps"


class SolverSettings(BaseModel):
    threads: int = 1
    seed: int = 0


class GlobalAlignOptions(BaseModel):
    """Knobs for the pairwise pointmap alignment (first-order, Adam)."""

    model_config = ConfigDict(extra="forbid")

    step: float = Field(default=1e-2, gt=0)
    max_iters: int = Field(default=500, ge=0)
    conf_threshold: float = Field(default=1.5, ge=0)
    backoff: float = Field(default=0.5, gt=0, lt=1)
    min_step: float = Field(default=1e-9, gt=0)
    cosine_decay: bool = True
    converge_tol: float = Field(default=1e-6, ge=0)
    log_every: int = Field(default=100, ge=1)


class CoordAlignOptions(BaseModel):
    """Knobs for the coordinate-alignment solver and its no-render baseline."""

    model_config = ConfigDict(extra="forbid")

    rot_step: float = Field(default=1e-2, gt=0)
    trans_step: float = Field(default=1e-2, gt=0)
    log_alpha_step: float = Field(default=5e-3, gt=0)
    max_iters: int = Field(default=2000, ge=0)
    n_starts: int = Field(default=4, ge=1)
    seed: int = 0
    render_subsample: Optional[int] = Field(default=None, ge=1)  # overrides the problem value when set
    depth_epsilon: float = Field(default=1e-6, gt=0)
    mean: Literal["matrix", "log"] = "matrix"
    polish: bool = True
    divergence_px: float = Field(default=1e6, gt=0)
    rot_weight: float = Field(default=1.0, gt=0)
    alpha_init: Optional[float] = Field(default=None, gt=0)
    log_every: int = Field(default=250, ge=1)


class IKOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: float = Field(default=1e-4, gt=0)
    max_iters: int = Field(default=300, ge=1)
    damping: float = Field(default=0.1, gt=0)
    step_clamp: float = Field(default=0.2, gt=0)
    max_rejections: int = Field(default=40, ge=1)


class RegressorOptions(BaseModel):
    """Training knobs for the 12-64-64-12 direct regressor."""

    model_config = ConfigDict(extra="forbid")

    step: float = Field(default=1e-3, gt=0)
    epochs: int = Field(default=3000, ge=1)
    seed: int = 0
    rot_weight: float = Field(default=1.0, gt=0)


class Settings(BaseSettings):
    """Main settings class with environment-specific configurations."""
    # Environment
    environment: Environment = Environment.DEVELOPMENT
    debug: bool = False

    # Logging; GRASPALIGN_LOG picks the level
    log: str = "info"
    log_format: str = Field(default="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} | {message}")

    # API
    api_title: str = "graspalign"
    api_version: str = "0.1.0"
    host: str = "127.0.0.1"
    port: int = 8000

    # Solver runtime
    threads: int = 1
    seed: int = 0

    @field_validator("log")
    @classmethod
    def validate_log(cls, v):
        if v.lower() not in LOG_LEVELS:
            raise ValueError(f"GRASPALIGN_LOG must be one of {sorted(LOG_LEVELS)}, got {v!r}")
        return v.lower()

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v):
        if v < 1:
            raise ValueError("threads must be >= 1")
        return v

    @property
    def logging(self) -> LoggingSettings:
        return LoggingSettings(
            level=LOG_LEVELS[self.log],
            format=self.log_format,
            serialize=self.environment == Environment.PRODUCTION,
        )

    @property
    def api(self) -> APISettings:
        return APISettings(
            host=self.host,
            port=self.port,
            title=self.api_title,
            version=self.api_version,
        )

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(threads=self.threads, seed=self.seed)

    model_config = SettingsConfigDict(
        env_prefix="GRASPALIGN_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class DevelopmentSettings(Settings):
    debug: bool = True


class ProductionSettings(Settings):
    debug: bool = False


class TestingSettings(Settings):
    debug: bool = True
    log: str = "error"


def get_settings() -> Settings:
    """Factory to return environment-specific settings."""
    env = Settings().environment
    if env == Environment.PRODUCTION:
        return ProductionSettings()
    elif env == Environment.TESTING:
        return TestingSettings()
    return DevelopmentSettings()

# Global settings instance
settings = get_settings()
