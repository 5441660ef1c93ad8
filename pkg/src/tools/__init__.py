from .scenarios import ScenarioTools

__all__ = ["ScenarioTools"]
