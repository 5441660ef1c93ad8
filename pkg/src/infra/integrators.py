import logging

from src.physics.errors import StiffnessError
from src.physics.evolution import Trajectory, evolve, evolve_exact
from src.physics.lindblad import Liouvillian
from src.physics.state import DensityMatrix
from src.ports.integrator import Integrator

logger = logging.getLogger(__name__)


class AdaptiveIntegrator(Integrator):
    def __init__(self, rtol: float = 1e-9, atol: float = 1e-12) -> None:
        self.__rtol = rtol
        self.__atol = atol

    def evolve(
        self, liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float, dt_out: float
    ) -> Trajectory:
        return evolve(liouvillian, rho0, t_final, dt_out, rtol=self.__rtol, atol=self.__atol)


class ExactPropagatorIntegrator(Integrator):
    def evolve(
        self, liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float, dt_out: float
    ) -> Trajectory:
        return evolve_exact(liouvillian, rho0, t_final, dt_out)


class AutoIntegrator(Integrator):
    """
    Picks the exact propagator when ||L||_1 * t_final exceeds the stiffness threshold,
    and falls back to it when the adaptive integrator gives up.
    """

    def __init__(
        self,
        adaptive: AdaptiveIntegrator,
        exact: ExactPropagatorIntegrator,
        stiffness_threshold: float = 2e4,
    ) -> None:
        self.__adaptive = adaptive
        self.__exact = exact
        self.__stiffness_threshold = stiffness_threshold

    def evolve(
        self, liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float, dt_out: float
    ) -> Trajectory:
        stiffness = liouvillian.norm1() * t_final
        if stiffness > self.__stiffness_threshold:
            logger.debug("stiffness %.3g above threshold, using exact propagator", stiffness)
            return self.__exact.evolve(liouvillian, rho0, t_final, dt_out)
        try:
            return self.__adaptive.evolve(liouvillian, rho0, t_final, dt_out)
        except StiffnessError as exc:
            logger.warning("%s; retrying with the exact propagator", exc)
            return self.__exact.evolve(liouvillian, rho0, t_final, dt_out)
