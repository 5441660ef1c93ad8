from abc import abstractmethod
from typing import Protocol, runtime_checkable

from src.physics.evolution import Trajectory
from src.physics.lindblad import Liouvillian
from src.physics.state import DensityMatrix


@runtime_checkable
class Integrator(Protocol):
    """
    Abstract interface for time integrators.
    Any class that implements this protocol can drive a scenario.
    """

    @abstractmethod
    def evolve(
        self, liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float, dt_out: float
    ) -> Trajectory:
        """
        Evolve rho0 under the Liouvillian and sample the state on the output grid.

        Args:
            liouvillian: Generator of the dynamics
            rho0: Initial state, on the same Hilbert space as the Liouvillian
            t_final: Final time in units of 1/Gamma
            dt_out: Output sampling interval; t_final is always sampled

        Returns:
            A Trajectory holding the sampled states and per-sample diagnostics
        """
        pass
