import logging
import os
from enum import StrEnum
from typing import Mapping

from pydantic import BaseModel, ConfigDict, Field, field_validator

ENV_PREFIX = "WERNER_"


class IntegratorChoice(StrEnum):
    AUTO = "auto"
    ADAPTIVE = "adaptive"
    EXACT = "exact"


class EngineSettings(BaseModel):
    """
    Engine-wide numerical settings.

    Every field can be overridden with a `WERNER_<FIELD>` environment variable,
    e.g. `WERNER_RTOL=1e-10` or `WERNER_INTEGRATOR=exact`.
    """

    model_config = ConfigDict(frozen=True)

    rtol: float = Field(1e-9, gt=0.0)
    atol: float = Field(1e-12, gt=0.0)
    integrator: IntegratorChoice = IntegratorChoice.AUTO
    # ||L||_1 * t_final above which `auto` uses the matrix-exponential propagator
    stiffness_threshold: float = Field(2e4, gt=0.0)
    n_max: int = Field(10, ge=1)
    workers: int = Field(4, ge=1)
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.strip().upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def env_names(cls) -> dict[str, str]:
        return {name: f"{ENV_PREFIX}{name.upper()}" for name in cls.model_fields}

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> "EngineSettings":
        environ = os.environ if environ is None else environ
        overrides = {
            name: environ[variable]
            for name, variable in cls.env_names().items()
            if environ.get(variable, "").strip()
        }
        return cls.model_validate(overrides)
