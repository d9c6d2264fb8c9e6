from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings (environment and .env); scenario physics lives in scenario files."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = Field(default="INFO", description="Root log level")

    # Sweep execution
    executor: Literal["local", "celery"] = Field(
        default="local", description="Run sweep points in-process or as Celery tasks"
    )
    redis_url: str = Field(default="redis://localhost:6379/0", description="Redis connection URL for Celery")
    celery_task_timeout_s: float = Field(default=3600.0, gt=0, description="Timeout when collecting task results")
    mc_block_size: int = Field(
        default=4096, ge=1, description="Monte Carlo trials per seeded block (fixed so results ignore worker count)"
    )

    # MNIST cache and mirror
    data_dir: str = Field(default="data/mnist", description="Directory holding MNIST IDX files")
    mnist_base_url: str = Field(
        default="https://ossci-datasets.s3.amazonaws.com/mnist/", description="Mirror root for gzip IDX files"
    )
    http_timeout_s: float = Field(default=60.0, gt=0, description="Timeout for dataset downloads")


settings = Settings()
