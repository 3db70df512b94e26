from __future__ import annotations

import json
from typing import Annotated

from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="REDLAB_", env_file=".env", env_ignore_empty=True, extra="ignore")

    app_name: str = "redlab"
    environment: str = "dev"

    # Logging
    log_level: str = "WARNING"
    json_logs: bool = False

    # Worker pool; unset means one worker per CPU
    threads: int | None = None

    # Enumeration limits
    exhaustive_input_cap: int = 24
    enumeration_unit_cap: int = 20

    # Work partitioning
    equivalence_chunk_vectors: int = 4096
    pattern_chunk_size: int = 16_384
    mc_chunk_trials: int = 65_536

    sweep_default_steps: int = 10

    # Prometheus textfile collector output
    metrics_textfile_path: str | None = None

    # Error reporting
    sentry_dsn: str | None = None
    sentry_environment: str | None = None
    sentry_enabled_environments: Annotated[list[str], NoDecode] = ["ci", "prod"]
    sentry_traces_sample_rate: float = 0.0

    @field_validator("sentry_enabled_environments", mode="before")
    @classmethod
    def _split_environments(cls, value: list[str] | str) -> list[str]:
        return cls._parse_env_list(value)

    @model_validator(mode="after")
    def _validate_limits(self) -> Settings:
        for name in (
            "exhaustive_input_cap",
            "enumeration_unit_cap",
            "equivalence_chunk_vectors",
            "pattern_chunk_size",
            "mc_chunk_trials",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be positive when set")

        if self.sweep_default_steps < 2:
            raise ValueError("sweep_default_steps must be at least 2")

        return self

    @staticmethod
    def _parse_env_list(raw_value: list[str] | str) -> list[str]:
        if isinstance(raw_value, list):
            return [item.strip() for item in raw_value if item.strip()]

        value = raw_value.strip()
        if not value:
            return []

        if value.startswith("["):
            parsed = json.loads(value)
            if not isinstance(parsed, list):
                raise ValueError("list config must deserialize to a list")
            return [str(item).strip() for item in parsed if str(item).strip()]

        return [item.strip() for item in value.split(",") if item.strip()]


settings = Settings()
