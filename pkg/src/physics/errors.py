class WernerSimError(Exception):
    """Base class for every error raised by the simulation engine."""


class CompositionError(WernerSimError):
    """Operands of a composite-space operation have different kinds."""


class ShapeError(WernerSimError):
    """Factor dimensions do not match the operand they describe."""


class DimensionMismatchError(WernerSimError):
    """Two operands live on Hilbert spaces of different dimension."""


class InvalidStateError(WernerSimError):
    """A matrix violates the density-matrix invariants."""


class ParameterError(WernerSimError):
    """A physical parameter is outside its admissible range."""


class DegenerateNormalizationError(ParameterError):
    """A quantity normalised by (1 - F) was requested for F = 1."""


class KernelExistsError(WernerSimError):
    """
    The displaced lowering operator is singular.

    The steady state is then the projector onto its kernel, see
    `src.physics.spin.kernel`.
    """


class DegenerateSteadyStateError(WernerSimError):
    """The initial state does not single out one steady state."""

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StiffnessError(WernerSimError):
    """
    The adaptive integrator could not make progress.

    Use `src.physics.evolution.evolve_exact` (matrix exponential of L*dt) instead.
    """


class TruncationWarning(UserWarning):
    """The cavity Fock truncation has not converged."""
