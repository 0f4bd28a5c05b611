"""
Process-level defaults read from the environment (and an optional .env file).
Command-line flags take precedence over these.
"""

import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    out_dir: str = "results"


def load_settings() -> Settings:
    """Settings from AOI_THREADS, AOI_LOG_LEVEL and AOI_OUT_DIR."""
    return Settings(
        threads=int(os.getenv("AOI_THREADS", "1")),
        log_level=os.getenv("AOI_LOG_LEVEL", "INFO").upper(),
        out_dir=os.getenv("AOI_OUT_DIR", "results"),
    )
