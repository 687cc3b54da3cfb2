"""
Runtime configuration for LimitForge.

Every size bound and sampling default lives here. Values come from
LIMITFORGE_* environment variables (a .env file is picked up from the usual
locations) and are validated by pydantic.
"""

import logging
import os
from functools import lru_cache
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

ENV_PREFIX = "LIMITFORGE_"


class Settings(BaseModel):
    """Size bounds and defaults shared by all modules."""

    hom_work_bound: float = Field(1e9, gt=0, description="max map evaluations for exact hom counting")
    canonical_max_nodes: int = Field(10, ge=1)
    canonical_max_rooted: int = Field(30, ge=1)
    cut_norm_exact_max: int = Field(22, ge=1)
    delta_hat_exact_max: int = Field(8, ge=1)
    maxcut_exact_max: int = Field(24, ge=1)
    enumeration_limit: float = Field(5e6, gt=0, description="max assignments for q^n enumerations")
    sigma_exact_limit: int = Field(200000, ge=1, description="max k-subsets for exact sigma")
    mc_samples: int = Field(100000, ge=1)
    d2_sample_cap: int = Field(4096, ge=1)
    max_representatives: int = Field(24, ge=1)
    local_search_restarts: int = Field(20, ge=1)
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        value = value.upper()
        if not isinstance(logging.getLevelName(value), int):
            raise ValueError(f"unknown log level {value}")
        return value


def _load_environment() -> bool:
    """Load a .env file from the first location that has one."""
    here = os.path.dirname(__file__)
    env_paths = [
        ".env",
        "../.env",
        os.path.join(here, ".env"),
        os.path.join(here, "../.env"),
        os.path.join(here, "../../.env"),
    ]
    for env_path in env_paths:
        if os.path.exists(env_path):
            load_dotenv(env_path, override=False)
            logger.info(f"Loaded environment from: {env_path}")
            return True
    logger.warning("⚠️ No .env file found, using process environment")
    return False


def _environment_overrides() -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for name in Settings.model_fields:
        value = os.getenv(ENV_PREFIX + name.upper())
        if value is not None and value != "":
            overrides[name] = value
    return overrides


_overrides: Dict[str, Settings] = {}


@lru_cache(maxsize=1)
def _load_settings() -> Settings:
    _load_environment()
    return Settings(**_environment_overrides())


def get_settings() -> Settings:
    """Get the settings in force (environment plus any CLI overrides)."""
    pinned = _overrides.get("settings")
    return pinned if pinned is not None else _load_settings()


def override_settings(**values: Optional[Any]) -> Settings:
    """Apply per-invocation overrides (CLI flags); None values are ignored."""
    updates = {k: v for k, v in values.items() if v is not None}
    current = get_settings()
    if not updates:
        return current
    merged = Settings(**{**current.model_dump(), **updates})
    _overrides["settings"] = merged
    return merged


def reset_settings() -> None:
    """Drop overrides and re-read the environment on next access."""
    _overrides.clear()
    _load_settings.cache_clear()
