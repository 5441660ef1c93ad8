from typing import Optional

from src.configs import EngineSettings, IntegratorChoice, get_settings
from src.infra import (
    AdaptiveIntegrator,
    AutoIntegrator,
    CsvResultSink,
    ExactPropagatorIntegrator,
    JsonResultSink,
)
from src.ports import Integrator, ResultSink
from src.tools import ScenarioTools


class DependencyContainer:
    """
    Singleton container for managing application dependencies.
    """

    __instance: Optional["DependencyContainer"] = None
    __integrators: Optional[dict[IntegratorChoice, Integrator]] = None
    __scenario_tools: Optional[ScenarioTools] = None

    def __new__(cls) -> "DependencyContainer":
        if cls.__instance is None:
            cls.__instance = super(DependencyContainer, cls).__new__(cls)
        return cls.__instance

    @classmethod
    def get_settings(cls) -> EngineSettings:
        return get_settings()

    @classmethod
    def get_integrator(cls, choice: IntegratorChoice | None = None) -> Integrator:
        """
        Get the integrator for a choice, or the one EngineSettings selects.

        Returns:
            The Integrator implementation.
        """
        if cls.__instance is None:
            cls.__instance = DependencyContainer()

        if cls.__instance.__integrators is None:
            cls.__instance.__initialize_integrators()

        return cls.__instance.__integrators[choice or cls.get_settings().integrator]

    @classmethod
    def get_result_sink(cls, as_json: bool = False) -> ResultSink:
        return JsonResultSink() if as_json else CsvResultSink()

    @classmethod
    def get_scenario_tools(cls) -> ScenarioTools:
        """
        Get the singleton instance of ScenarioTools.

        Returns:
            ScenarioTools wired to the configured integrators.
        """
        if cls.__instance is None:
            cls.__instance = DependencyContainer()

        if cls.__instance.__scenario_tools is None:
            cls.__instance.__initialize_scenario_tools()

        return cls.__instance.__scenario_tools

    @classmethod
    def reset(cls) -> None:
        """Drop every cached dependency; the next getter rebuilds from current settings."""
        if cls.__instance is not None:
            cls.__instance.__integrators = None
            cls.__instance.__scenario_tools = None

    def __initialize_integrators(self) -> None:
        settings = self.get_settings()
        adaptive = AdaptiveIntegrator(rtol=settings.rtol, atol=settings.atol)
        exact = ExactPropagatorIntegrator()
        self.__integrators = {
            IntegratorChoice.ADAPTIVE: adaptive,
            IntegratorChoice.EXACT: exact,
            IntegratorChoice.AUTO: AutoIntegrator(adaptive, exact, settings.stiffness_threshold),
        }

    def __initialize_scenario_tools(self) -> None:
        self.get_integrator()
        self.__scenario_tools = ScenarioTools(
            self.__integrators[self.get_settings().integrator],
            self.get_settings(),
            integrators=self.__integrators,
        )


dependency_container = DependencyContainer()
