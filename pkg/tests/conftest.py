import numpy as np
import pytest

from src.configs import EngineSettings, IntegratorChoice
from src.infra import AdaptiveIntegrator, AutoIntegrator, ExactPropagatorIntegrator
from src.tools import ScenarioTools


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def settings() -> EngineSettings:
    return EngineSettings()


@pytest.fixture
def integrators(settings) -> dict:
    adaptive = AdaptiveIntegrator(rtol=settings.rtol, atol=settings.atol)
    exact = ExactPropagatorIntegrator()
    return {
        IntegratorChoice.ADAPTIVE: adaptive,
        IntegratorChoice.EXACT: exact,
        IntegratorChoice.AUTO: AutoIntegrator(adaptive, exact, settings.stiffness_threshold),
    }


@pytest.fixture
def tools(settings, integrators) -> ScenarioTools:
    return ScenarioTools(integrators[IntegratorChoice.AUTO], settings, integrators=integrators)
