"""
Complex-matrix state types and the quantum-information functionals built on them.

All objects are immutable once constructed: their numpy buffers are flagged
read-only. Numerical identity is positional; basis labels only travel along for
diagnostics and file output.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from string import ascii_letters
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigvalsh, svdvals
from scipy.special import xlogy

from src.physics.errors import (
    CompositionError,
    DimensionMismatchError,
    InvalidStateError,
    ShapeError,
)

logger = logging.getLogger(__name__)

LABEL_SEPARATOR = "⊗"


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    trace: float = 1e-12
    min_eigenvalue: float = -1e-10


# Closed-form constructions are held to STRICT, integrated states to ENGINE.
STRICT = Tolerances()
ENGINE = Tolerances(hermiticity=1e-10, trace=1e-9, min_eigenvalue=-1e-8)
# entropies need a valid spectrum whatever tolerances the state was built with
SPECTRUM_MIN_EIGENVALUE = -1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _labels(labels: Iterable[str] | None, dim: int) -> tuple[str, ...]:
    if labels is None:
        return tuple(str(index) for index in range(dim))
    labels = tuple(labels)
    if len(labels) != dim:
        raise ShapeError(f"{len(labels)} basis labels given for dimension {dim}")
    return labels


def _looser(a: Tolerances, b: Tolerances) -> Tolerances:
    return Tolerances(
        hermiticity=max(a.hermiticity, b.hermiticity),
        trace=max(a.trace, b.trace),
        min_eigenvalue=min(a.min_eigenvalue, b.min_eigenvalue),
    )


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """General complex matrix: Hamiltonians, jump operators, projectors."""

    entries: np.ndarray
    basis_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise ShapeError(f"operator must be a non-empty matrix, got shape {matrix.shape}")
        object.__setattr__(self, "entries", _frozen(matrix))
        if self.basis_labels is not None:
            object.__setattr__(self, "basis_labels", _labels(self.basis_labels, matrix.shape[0]))

    @property
    def dim_in(self) -> int:
        return self.entries.shape[1]

    @property
    def dim_out(self) -> int:
        return self.entries.shape[0]

    @property
    def is_square(self) -> bool:
        return self.dim_in == self.dim_out

    @classmethod
    def identity(cls, dim: int, basis_labels: Iterable[str] | None = None) -> "OperatorMatrix":
        return cls(np.eye(dim), None if basis_labels is None else tuple(basis_labels))

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.basis_labels)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.dim_in != other.dim_out:
            raise DimensionMismatchError(
                f"cannot compose {self.dim_out}x{self.dim_in} with {other.dim_out}x{other.dim_in}"
            )
        return OperatorMatrix(self.entries @ other.entries, self.basis_labels)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.entries.shape != other.entries.shape:
            raise DimensionMismatchError("operator shapes differ")
        return OperatorMatrix(self.entries + other.entries, self.basis_labels)

    def scaled(self, factor: complex) -> "OperatorMatrix":
        return OperatorMatrix(factor * self.entries, self.basis_labels)

    def apply(self, ket: "Ket") -> "Ket":
        """Matrix action on a ket; the result is generally unnormalized."""
        if self.dim_in != ket.dim:
            raise DimensionMismatchError(f"operator expects {self.dim_in}, ket has {ket.dim}")
        return Ket(self.entries @ ket.amplitudes, self.basis_labels, normalized=False)


@dataclass(frozen=True, eq=False)
class Ket:
    amplitudes: np.ndarray
    basis_labels: tuple[str, ...] | None = None
    normalized: bool = True

    def __post_init__(self) -> None:
        vector = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if vector.size == 0:
            raise ShapeError("ket must have at least one amplitude")
        if self.normalized:
            norm_error = abs(float(np.vdot(vector, vector).real) - 1.0)
            if norm_error > 1e-12:
                raise InvalidStateError(f"ket squared norm deviates from 1 by {norm_error:.3e}")
        object.__setattr__(self, "amplitudes", _frozen(vector))
        object.__setattr__(self, "basis_labels", _labels(self.basis_labels, vector.size))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, dim: int, index: int, basis_labels: Iterable[str] | None = None) -> "Ket":
        vector = np.zeros(dim, dtype=complex)
        vector[index] = 1.0
        return cls(vector, None if basis_labels is None else tuple(basis_labels))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "Ket":
        norm = self.norm()
        if norm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return Ket(self.amplitudes / norm, self.basis_labels)

    def inner(self, other: "Ket") -> complex:
        """<self|other>."""
        if self.dim != other.dim:
            raise DimensionMismatchError(f"ket dimensions {self.dim} and {other.dim} differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "DensityMatrix":
        if not self.normalized:
            raise InvalidStateError("projector of an unnormalized ket is not a state")
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.basis_labels)


def hermiticity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(eigvalsh(0.5 * (matrix + matrix.conj().T))[0])


def validate_density_matrix(matrix: np.ndarray, tolerances: Tolerances = STRICT) -> None:
    herm = hermiticity_error(matrix)
    if herm > tolerances.hermiticity:
        raise InvalidStateError(f"matrix is not Hermitian (max deviation {herm:.3e})")
    trace_error = abs(complex(np.trace(matrix)) - 1.0)
    if trace_error > tolerances.trace:
        raise InvalidStateError(f"trace deviates from 1 by {trace_error:.3e}")
    lowest = min_eigenvalue(matrix)
    if lowest < tolerances.min_eigenvalue:
        raise InvalidStateError(f"negative eigenvalue {lowest:.3e}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix over a labeled basis."""

    entries: np.ndarray
    basis_labels: tuple[str, ...] | None = None
    tolerances: Tolerances = STRICT

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise ShapeError(f"density matrix must be square, got shape {matrix.shape}")
        validate_density_matrix(matrix, self.tolerances)
        object.__setattr__(self, "entries", _frozen(matrix))
        object.__setattr__(self, "basis_labels", _labels(self.basis_labels, matrix.shape[0]))

    @classmethod
    def from_numeric(
        cls,
        matrix: np.ndarray,
        basis_labels: Iterable[str] | None = None,
        tolerances: Tolerances = ENGINE,
    ) -> "DensityMatrix":
        """Build from numerically produced entries, dropping the anti-Hermitian roundoff."""
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim == 2 and matrix.shape[0] == matrix.shape[1]:
            herm = hermiticity_error(matrix)
            if herm > tolerances.hermiticity:
                raise InvalidStateError(f"matrix is not Hermitian (max deviation {herm:.3e})")
            matrix = 0.5 * (matrix + matrix.conj().T)
        return cls(matrix, None if basis_labels is None else tuple(basis_labels), tolerances)

    @classmethod
    def maximally_mixed(
        cls, dim: int, basis_labels: Iterable[str] | None = None
    ) -> "DensityMatrix":
        return cls(np.eye(dim) / dim, None if basis_labels is None else tuple(basis_labels))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def expectation(self, operator: OperatorMatrix | np.ndarray) -> complex:
        matrix = operator.entries if isinstance(operator, OperatorMatrix) else np.asarray(operator)
        if matrix.shape != self.entries.shape:
            raise DimensionMismatchError(
                f"operator shape {matrix.shape} vs state {self.entries.shape}"
            )
        return complex(np.trace(matrix @ self.entries))

    def population(self, index: int) -> float:
        return float(self.entries[index, index].real)

    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()


def tensor(a, b):
    """Kronecker product of two objects of the same kind, labels joined with '⊗'."""
    if type(a) is not type(b):
        raise CompositionError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")

    def joined(left, right):
        if left is None or right is None:
            return None
        return tuple(f"{x}{LABEL_SEPARATOR}{y}" for x in left for y in right)

    if isinstance(a, Ket):
        return Ket(
            np.kron(a.amplitudes, b.amplitudes),
            joined(a.basis_labels, b.basis_labels),
            normalized=a.normalized and b.normalized,
        )
    if isinstance(a, DensityMatrix):
        return DensityMatrix(
            np.kron(a.entries, b.entries),
            joined(a.basis_labels, b.basis_labels),
            _looser(a.tolerances, b.tolerances),
        )
    if isinstance(a, OperatorMatrix):
        return OperatorMatrix(np.kron(a.entries, b.entries), joined(a.basis_labels, b.basis_labels))
    raise CompositionError(f"tensor is not defined for {type(a).__name__}")


def _factor_labels(labels: Sequence[str], dims: Sequence[int]) -> list[list[str]] | None:
    parts = [label.split(LABEL_SEPARATOR) for label in labels]
    if any(len(part) != len(dims) for part in parts):
        return None
    factors = []
    for position, dim in enumerate(dims):
        stride = math.prod(dims[position + 1:])
        factors.append([parts[index * stride][position] for index in range(dim)])
    return factors


def partial_trace(rho: DensityMatrix, dims: Sequence[int], keep: Iterable[int]) -> DensityMatrix:
    """Reduced state over the factors in `keep`; factor order follows `dims`."""
    dims = [int(dim) for dim in dims]
    if not dims or any(dim <= 0 for dim in dims) or math.prod(dims) != rho.dim:
        raise ShapeError(f"factor dimensions {dims} do not multiply to {rho.dim}")
    kept = sorted(set(keep))
    if not kept or kept[0] < 0 or kept[-1] >= len(dims):
        raise ShapeError(f"kept factors {kept} are not a nonempty subset of 0..{len(dims) - 1}")
    if 2 * len(dims) > len(ascii_letters):
        raise ShapeError("too many tensor factors")

    rows = ascii_letters[: len(dims)]
    cols = "".join(
        rows[index] if index not in kept else ascii_letters[len(dims) + index]
        for index in range(len(dims))
    )
    out = "".join(rows[index] for index in kept) + "".join(cols[index] for index in kept)
    kept_dim = math.prod(dims[index] for index in kept)
    reduced = np.einsum(f"{rows}{cols}->{out}", rho.entries.reshape(dims + dims))
    reduced = reduced.reshape(kept_dim, kept_dim)

    labels = None
    factors = _factor_labels(rho.basis_labels, dims)
    if factors is not None:
        labels = tuple(
            LABEL_SEPARATOR.join(combo)
            for combo in itertools.product(*(factors[index] for index in kept))
        )
    return DensityMatrix.from_numeric(reduced, labels, rho.tolerances)


def fidelity_with_pure(rho: DensityMatrix, psi: Ket) -> float:
    """<psi|rho|psi> for a pure reference state."""
    if rho.dim != psi.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} vs ket dimension {psi.dim}")
    value = complex(np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes))
    if abs(value.imag) >= 1e-12:
        raise InvalidStateError(f"<psi|rho|psi> has imaginary part {value.imag:.3e}")
    return value.real


def _spectrum(rho: DensityMatrix) -> np.ndarray:
    eigenvalues = eigvalsh(0.5 * (rho.entries + rho.entries.conj().T))
    if eigenvalues[0] < SPECTRUM_MIN_EIGENVALUE:
        raise InvalidStateError(f"negative eigenvalue {eigenvalues[0]:.3e}")
    return np.clip(eigenvalues, 0.0, 1.0)


def von_neumann_entropy_paper(rho: DensityMatrix) -> float:
    """
    Sum of lambda*ln(lambda) over the spectrum, with 0*ln(0) = 0.

    This is the sign convention of the closed-form entropy expressions used by
    `src.physics.werner`; the value is never positive.
    """
    eigenvalues = _spectrum(rho)
    return float(np.sum(xlogy(eigenvalues, eigenvalues)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Conventional (non-negative) entropy in nats."""
    return -von_neumann_entropy_paper(rho)


def purity(rho: DensityMatrix) -> float:
    return float(np.trace(rho.entries @ rho.entries).real)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"state dimensions {a.dim} and {b.dim} differ")
    return 0.5 * float(np.sum(svdvals(a.entries - b.entries)))
