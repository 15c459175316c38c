from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix ``SQT_``)."""

    # Logging
    LOG_LEVEL: str = "WARNING"

    # Monte-Carlo oracle
    MC_CHUNK: int = 100_000  # shots per independent stream
    MC_WORKERS: int = 1
    SIGMA_TOLERANCE: float = 3.0

    # Invariant suite (`check` command)
    CHECK_SHOTS: int = 1_000_000
    CHECK_SEED: int = 20240917
    CHECK_RANDOM_CIRCUITS: int = 1000
    CHECK_SIGMA_TOLERANCE: float = 4.0

    # Output
    CSV_FLOAT_FORMAT: str = ".16e"

    class Config:
        env_file = ".env"
        env_prefix = "SQT_"
        extra = "ignore"


@lru_cache
def get_settings() -> Settings:
    return Settings()
