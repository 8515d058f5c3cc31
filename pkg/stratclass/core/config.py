"""Application settings"""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings, read from the environment and an optional .env file"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="STRATCLASS_",
        case_sensitive=True,
        extra="ignore",
    )

    PROJECT_NAME: str = "stratclass"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Outputs
    OUTPUT_DIR: Path = Path("runs")

    # Experiments
    DEFAULT_REPLICATES: int = 20
    THETA_SLACK: float = 1.1
    SWEEP_WORKERS: int = 1

    # Hindsight baseline
    BASELINE_ITERATIONS: int = 100_000
    BASELINE_TOL: float = 1e-4
    CHECK_INTERVAL: int = 100


settings = Settings()
