from typing import Optional

from .scenario import (
    ConfigError,
    InitialPreset,
    Observable,
    ScenarioConfig,
    ScenarioParameters,
    load_scenario,
    parse_scenario_text,
)
from .settings import EngineSettings, IntegratorChoice

__all__ = [
    "ConfigError",
    "EngineSettings",
    "InitialPreset",
    "IntegratorChoice",
    "Observable",
    "ScenarioConfig",
    "ScenarioParameters",
    "get_settings",
    "load_scenario",
    "parse_scenario_text",
    "reset_settings",
]

# Global variable to hold the single instance
_engine_settings: Optional[EngineSettings] = None


def get_settings() -> EngineSettings:
    """
    Returns the process-wide EngineSettings, read from WERNER_* variables on first use.

    Returns:
        The EngineSettings instance.
    """
    global _engine_settings

    if _engine_settings is None:
        _engine_settings = EngineSettings.from_env()

    return _engine_settings


def reset_settings() -> None:
    """Forget the cached settings so the next `get_settings` re-reads the environment."""
    global _engine_settings
    _engine_settings = None
