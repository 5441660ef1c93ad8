"""Time evolution of vectorized density matrices under a fixed Liouvillian."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from src.physics.errors import DimensionMismatchError, ParameterError, ShapeError, StiffnessError
from src.physics.lindblad import Liouvillian, unvec, vec
from src.physics.state import ENGINE, DensityMatrix, hermiticity_error, min_eigenvalue

logger = logging.getLogger(__name__)

RENORMALIZE_ABOVE = 1e-9


@dataclass(frozen=True)
class StepDiagnostics:
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float
    # max |L vec(rho)|, i.e. the size of d(rho)/dt at the sample
    rate_norm: float
    renormalized: bool = False


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    diagnostics: tuple[StepDiagnostics, ...]
    method: str = "adaptive"

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        if times.ndim != 1 or len(times) != len(self.states) or len(times) != len(self.diagnostics):
            raise ShapeError("times, states and diagnostics must have equal length")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ShapeError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]

    def observable(self, function: Callable[[DensityMatrix], float]) -> np.ndarray:
        return np.array([function(state) for state in self.states])


def output_times(t_final: float, dt_out: float) -> np.ndarray:
    """0, dt_out, 2 dt_out, ... up to and always including t_final."""
    if not t_final > 0 or not dt_out > 0:
        raise ParameterError(f"t_final and dt_out must be positive, got {t_final}, {dt_out}")
    count = math.floor(t_final / dt_out + 1e-9)
    times = dt_out * np.arange(count + 1, dtype=float)
    if times[-1] >= t_final - 1e-9 * dt_out:
        times[-1] = t_final
    else:
        times = np.append(times, t_final)
    return times


def _check_inputs(liouvillian: Liouvillian, rho0: DensityMatrix) -> None:
    if rho0.dim != liouvillian.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} vs Liouvillian dim {liouvillian.dim}")


def _sample(liouvillian: Liouvillian, vector: np.ndarray) -> tuple[DensityMatrix, StepDiagnostics]:
    matrix = unvec(vector, liouvillian.dim)
    trace = complex(np.trace(matrix))
    trace_error = abs(trace - 1)
    renormalized = trace_error > RENORMALIZE_ABOVE
    if renormalized:
        logger.warning("renormalizing sample with trace error %.3e", trace_error)
        matrix = matrix / trace
    herm = hermiticity_error(matrix)
    state = DensityMatrix.from_numeric(matrix, liouvillian.basis_labels, ENGINE)
    diagnostics = StepDiagnostics(
        trace_error=trace_error,
        hermiticity_error=herm,
        min_eigenvalue=min_eigenvalue(state.entries),
        rate_norm=float(np.max(np.abs(liouvillian.matrix @ vec(state.entries)))),
        renormalized=renormalized,
    )
    return state, diagnostics


def _trajectory(
    liouvillian: Liouvillian, times: np.ndarray, vectors: list[np.ndarray], method: str
) -> Trajectory:
    samples = [_sample(liouvillian, vector) for vector in vectors]
    return Trajectory(
        times,
        tuple(state for state, _ in samples),
        tuple(diagnostics for _, diagnostics in samples),
        method,
    )


def evolve(
    liouvillian: Liouvillian,
    rho0: DensityMatrix,
    t_final: float,
    dt_out: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "DOP853",
) -> Trajectory:
    """
    Integrate d vec(rho)/dt = L vec(rho) with an embedded Runge-Kutta pair.

    Raises:
        StiffnessError: the step size collapsed; use `evolve_exact`.
    """
    _check_inputs(liouvillian, rho0)
    times = output_times(t_final, dt_out)
    generator = liouvillian.matrix
    solution = solve_ivp(
        lambda _t, y: generator @ y,
        (0.0, float(times[-1])),
        vec(rho0.entries).astype(complex),
        method=method,
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if solution.status < 0 or solution.y.shape[1] != len(times):
        reached = float(solution.t[-1]) if len(solution.t) else 0.0
        raise StiffnessError(
            f"adaptive integration stopped at t={reached:.4g}: {solution.message}; "
            "use the exact propagator"
        )
    logger.debug("%s: %d right-hand side evaluations", method, solution.nfev)
    return _trajectory(liouvillian, times, list(solution.y.T), "adaptive")


def evolve_exact(
    liouvillian: Liouvillian, rho0: DensityMatrix, t_final: float, dt_out: float
) -> Trajectory:
    """Step with exp(L dt) between output times."""
    _check_inputs(liouvillian, rho0)
    times = output_times(t_final, dt_out)
    propagators: dict[float, np.ndarray] = {}
    vector = vec(rho0.entries).astype(complex)
    vectors = [vector]
    for step in np.diff(times):
        key = round(step / dt_out, 9)
        if key not in propagators:
            propagators[key] = expm(liouvillian.matrix * step)
        vector = propagators[key] @ vector
        vectors.append(vector)
    logger.debug("exact propagation with %d distinct step sizes", len(propagators))
    return _trajectory(liouvillian, times, vectors, "exact")
