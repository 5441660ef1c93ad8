from .errors import (
    CompositionError,
    DegenerateNormalizationError,
    DegenerateSteadyStateError,
    DimensionMismatchError,
    InvalidStateError,
    KernelExistsError,
    ParameterError,
    ShapeError,
    StiffnessError,
    TruncationWarning,
    WernerSimError,
)
from .state import DensityMatrix, Ket, OperatorMatrix

__all__ = [
    "CompositionError",
    "DegenerateNormalizationError",
    "DegenerateSteadyStateError",
    "DensityMatrix",
    "DimensionMismatchError",
    "InvalidStateError",
    "Ket",
    "KernelExistsError",
    "OperatorMatrix",
    "ParameterError",
    "ShapeError",
    "StiffnessError",
    "TruncationWarning",
    "WernerSimError",
]
