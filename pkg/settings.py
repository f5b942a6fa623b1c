"""
Runtime Settings
Environment-driven defaults (prefix SL2_, optional .env) for limits, sampling,
caching and logging; command-line flags override them
"""

from pathlib import Path
from typing import List, Optional

from pydantic import Field, PositiveFloat, PositiveInt, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from models.reports import EnumLimits


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SL2_", env_file=".env", extra="ignore")

    max_cosets: PositiveInt = 2_000_000
    max_live_cosets: PositiveInt = 2_000_000
    enum_time_budget_s: Optional[PositiveFloat] = None
    max_group_elements: PositiveInt = 10 ** 7

    seed: int = 0
    cache_dir: Optional[Path] = None
    n_jobs: int = Field(1, description="joblib workers for campaign stages; -1 uses every core")

    log_level: str = "WARNING"
    log_json: bool = False

    residue_moduli: List[int] = Field(default_factory=lambda: [3, 5, 7, 11, 13])
    decomposition_m_values: List[PositiveInt] = Field(default_factory=lambda: [1, 2, 3, 5, 6, 10])
    decomposition_samples: PositiveInt = 500
    decomposition_max_length: PositiveInt = 40

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, level: str) -> str:
        level = level.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {level!r}")
        return level

    @field_validator("n_jobs")
    @classmethod
    def _nonzero_jobs(cls, n_jobs: int) -> int:
        if n_jobs == 0:
            raise ValueError("n_jobs must be nonzero")
        return n_jobs

    def enum_limits(self) -> EnumLimits:
        return EnumLimits(max_cosets=self.max_cosets,
                          max_live_cosets=self.max_live_cosets,
                          time_budget_s=self.enum_time_budget_s)
