"""
Collective-spin (Dicke) bases, ladder operators, Bell states and the pairwise
Clebsch-Gordan coupling of 2N spin-1/2 atoms.

Single-atom ordering is (e, g), so |e> carries m = +1/2 and every product basis
runs e before g, e.g. {ee, eg, ge, gg} for two atoms.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sympy import Rational
from sympy.physics.quantum.cg import CG

from src.physics.errors import DimensionMismatchError, ParameterError, ShapeError
from src.physics.state import DensityMatrix, Ket, OperatorMatrix

logger = logging.getLogger(__name__)

ATOM_LEVELS = ("e", "g")
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


class CollectiveOperator(StrEnum):
    LOWER = "lower"
    RAISE = "raise"
    Z = "z"


def spin_label(value: float) -> str:
    return str(Fraction(value).limit_denominator(2))


def _half_integer(value: float) -> Rational:
    doubled = round(2 * value)
    if abs(2 * value - doubled) > 1e-9:
        raise ParameterError(f"{value} is not a half-integer")
    return Rational(doubled, 2)


def _m_values(spin: float) -> tuple[float, ...]:
    return tuple(spin - k for k in range(round(2 * spin) + 1))


@lru_cache(maxsize=None)
def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j: float, m: float) -> float:
    """<j1 m1; j2 m2 | j m> with Condon-Shortley phases."""
    coefficient = CG(
        _half_integer(j1),
        _half_integer(m1),
        _half_integer(j2),
        _half_integer(m2),
        _half_integer(j),
        _half_integer(m),
    ).doit()
    return float(coefficient)


@dataclass(frozen=True)
class DickeBasis:
    """|S,m> for m = S, S-1, ..., -S."""

    two_s: int

    def __post_init__(self) -> None:
        if self.two_s < 0:
            raise ParameterError(f"spin must be non-negative, got {self.two_s}/2")

    @classmethod
    def from_spin(cls, spin: float) -> "DickeBasis":
        return cls(int(2 * _half_integer(spin)))

    @property
    def spin(self) -> float:
        return self.two_s / 2

    @property
    def dim(self) -> int:
        return self.two_s + 1

    @property
    def m_values(self) -> tuple[float, ...]:
        return _m_values(self.spin)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"|{spin_label(self.spin)},{spin_label(m)}⟩" for m in self.m_values)

    def ket(self, m: float) -> Ket:
        return Ket.basis(self.dim, round(self.spin - m), self.labels)


class DriveParams(BaseModel):
    """Resonant classical drive |Omega| e^{-i phi} and collective decay rate Gamma."""

    model_config = ConfigDict(frozen=True)

    omega_abs: float = Field(0.0, ge=0.0)
    phi: float = 0.0
    gamma: float = Field(1.0, gt=0.0)

    @property
    def omega_over_gamma(self) -> float:
        return self.omega_abs / self.gamma

    @property
    def displacement(self) -> complex:
        """i (|Omega|/Gamma) e^{i phi}, the scalar shift of the displaced lowering operator."""
        return 1j * self.omega_over_gamma * complex(np.exp(1j * self.phi))


@dataclass(frozen=True)
class CoupledLabel:
    spin: float
    m: float
    copy: int
    # spins met along the coupling tree, e.g. (1/2, 1/2, S', 1/2, 1/2, S'') for four atoms
    path: tuple[float, ...]

    @property
    def sector(self) -> tuple[float, int]:
        return (self.spin, self.copy)

    def __str__(self) -> str:
        return f"|{spin_label(self.spin)},{spin_label(self.m)}⟩_{self.copy}"


@dataclass(frozen=True, eq=False)
class CoupledBasis:
    """
    Coupled basis of n_particles spin-1/2 atoms.

    Row k of `unitary` holds the conjugated product-basis amplitudes of coupled
    state k, so `unitary @ psi` converts product amplitudes to coupled ones.
    """

    n_particles: int
    labels: tuple[CoupledLabel, ...]
    unitary: OperatorMatrix

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def label_strings(self) -> tuple[str, ...]:
        return tuple(str(label) for label in self.labels)

    def sector_keys(self) -> tuple[tuple[float, int], ...]:
        return tuple(dict.fromkeys(label.sector for label in self.labels))

    def multiplicities(self) -> dict[float, int]:
        counts: dict[float, int] = {}
        for spin, _ in self.sector_keys():
            counts[spin] = counts.get(spin, 0) + 1
        return counts

    def sector_indices(self, spin: float, copy: int) -> list[int]:
        indices = [k for k, label in enumerate(self.labels) if label.sector == (spin, copy)]
        if not indices:
            raise ParameterError(f"no sector S={spin_label(spin)}, copy {copy} in this basis")
        return indices

    def index(self, spin: float, m: float, copy: int = 1) -> int:
        for k, label in enumerate(self.labels):
            if label.sector == (spin, copy) and abs(label.m - m) < 1e-9:
                return k
        raise ParameterError(f"no state |{spin_label(spin)},{spin_label(m)}⟩_{copy}")

    def state(self, spin: float, m: float, copy: int = 1) -> Ket:
        """Coupled state expressed in the product basis."""
        row = self.unitary.entries[self.index(spin, m, copy)]
        return Ket(row.conj(), product_labels(self.n_particles))

    def sector_projector(self, spin: float, copy: int) -> OperatorMatrix:
        diagonal = np.zeros(self.dim)
        diagonal[self.sector_indices(spin, copy)] = 1.0
        return OperatorMatrix(np.diag(diagonal), self.label_strings)


@dataclass(frozen=True, eq=False)
class _Multiplet:
    spin: float
    path: tuple[float, ...]
    vectors: np.ndarray  # rows ordered m = S..-S, columns over the product basis


_SPIN_HALF = _Multiplet(0.5, (), np.eye(2))


def _couple(left: list[_Multiplet], right: list[_Multiplet]) -> list[_Multiplet]:
    coupled = []
    for lhs, rhs in itertools.product(left, right):
        j1, j2 = lhs.spin, rhs.spin
        path = lhs.path + (j1,) + rhs.path + (j2,)
        total = j1 + j2
        while total >= abs(j1 - j2) - 1e-9:
            rows = []
            for m in _m_values(total):
                vector = np.zeros(lhs.vectors.shape[1] * rhs.vectors.shape[1])
                for i1, m1 in enumerate(_m_values(j1)):
                    m2 = m - m1
                    if abs(m2) > j2 + 1e-9:
                        continue
                    coefficient = clebsch_gordan(j1, m1, j2, m2, total, m)
                    if coefficient:
                        i2 = round(j2 - m2)
                        vector += coefficient * np.kron(lhs.vectors[i1], rhs.vectors[i2])
                rows.append(vector)
            coupled.append(_Multiplet(total, path, np.array(rows)))
            total -= 1
    return coupled


def product_labels(n_atoms: int) -> tuple[str, ...]:
    return tuple("".join(levels) for levels in itertools.product(ATOM_LEVELS, repeat=n_atoms))


def product_ket(pattern: str) -> Ket:
    """Bare product state such as 'eg' or 'eegg' (atom 1 first)."""
    if not pattern or set(pattern) - set(ATOM_LEVELS):
        raise ParameterError(f"product pattern must use only 'e' and 'g', got {pattern!r}")
    index = int("".join("0" if level == "e" else "1" for level in pattern), 2)
    return Ket.basis(2 ** len(pattern), index, product_labels(len(pattern)))


def build_coupled_basis(n_particles: int) -> CoupledBasis:
    """
    Couple atoms pairwise, (1,2) -> S', (3,4) -> S'', ..., then fold the pair spins
    left to right. Degenerate copies of one S are numbered by their coupling path in
    descending order, so for four atoms |1,0>_1, |1,0>_2, |1,0>_3 come from
    ([1],[1]), ([1],[0]), ([0],[1]) and |0,0>_1, |0,0>_2 from ([1],[1]), ([0],[0]).
    """
    if n_particles < 2 or n_particles % 2:
        raise ParameterError(f"the coupled basis needs an even number of atoms, got {n_particles}")

    pair = _couple([_SPIN_HALF], [_SPIN_HALF])
    multiplets = pair
    for _ in range(n_particles // 2 - 1):
        multiplets = _couple(multiplets, pair)
    multiplets.sort(key=lambda multiplet: (multiplet.spin, multiplet.path), reverse=True)

    labels: list[CoupledLabel] = []
    rows: list[np.ndarray] = []
    copies: dict[float, int] = {}
    for multiplet in multiplets:
        copy = copies[multiplet.spin] = copies.get(multiplet.spin, 0) + 1
        for m, vector in zip(_m_values(multiplet.spin), multiplet.vectors):
            labels.append(CoupledLabel(multiplet.spin, m, copy, multiplet.path))
            rows.append(vector.conj())

    unitary = np.array(rows, dtype=complex)
    if unitary.shape != (2**n_particles, 2**n_particles):
        raise ShapeError(f"coupling produced {unitary.shape[0]} states for {n_particles} atoms")
    label_strings = tuple(str(label) for label in labels)
    logger.debug("coupled basis for %d atoms: multiplicities %s", n_particles, copies)
    return CoupledBasis(n_particles, tuple(labels), OperatorMatrix(unitary, label_strings))


def lowering_operator(basis: DickeBasis) -> OperatorMatrix:
    """S^- with <S,m-1|S^-|S,m> = sqrt(S(S+1) - m(m-1))."""
    spin = basis.spin
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    for k, m in enumerate(basis.m_values[:-1]):
        matrix[k + 1, k] = math.sqrt(spin * (spin + 1) - m * (m - 1))
    return OperatorMatrix(matrix, basis.labels)


def raising_operator(basis: DickeBasis) -> OperatorMatrix:
    return lowering_operator(basis).dagger()


def sz_operator(basis: DickeBasis) -> OperatorMatrix:
    return OperatorMatrix(np.diag(basis.m_values).astype(complex), basis.labels)


def collective_product_operator(n_atoms: int, which: CollectiveOperator) -> OperatorMatrix:
    """Sum over atoms of sigma^-, sigma^+ or sigma^z/2 in the product basis."""
    single = {
        CollectiveOperator.LOWER: SIGMA_MINUS,
        CollectiveOperator.RAISE: SIGMA_MINUS.conj().T,
        CollectiveOperator.Z: np.diag([0.5, -0.5]).astype(complex),
    }[CollectiveOperator(which)]
    total = np.zeros((2**n_atoms, 2**n_atoms), dtype=complex)
    for position in range(n_atoms):
        factors = [np.eye(2)] * n_atoms
        factors[position] = single
        term = factors[0]
        for factor in factors[1:]:
            term = np.kron(term, factor)
        total += term
    return OperatorMatrix(total, product_labels(n_atoms))


def collective_operator_in_coupled_basis(
    basis: CoupledBasis, which: CollectiveOperator
) -> OperatorMatrix:
    unitary = basis.unitary.entries
    product = collective_product_operator(basis.n_particles, which).entries
    conjugated = unitary @ product @ unitary.conj().T

    off_block = 0.0
    sectors = [label.sector for label in basis.labels]
    for row, col in zip(*np.nonzero(np.abs(conjugated) > 0)):
        if sectors[row] != sectors[col]:
            off_block = max(off_block, abs(conjugated[row, col]))
    logger.debug("collective %s: largest off-sector element %.3e", which, off_block)
    return OperatorMatrix(conjugated, basis.label_strings)


def collective_lowering(basis: DickeBasis | CoupledBasis) -> OperatorMatrix:
    if isinstance(basis, CoupledBasis):
        return collective_operator_in_coupled_basis(basis, CollectiveOperator.LOWER)
    return lowering_operator(basis)


def total_spin_squared(basis: DickeBasis | CoupledBasis) -> OperatorMatrix:
    """S^2 = S+S- + Sz^2 - Sz."""
    if isinstance(basis, CoupledBasis):
        lower = collective_operator_in_coupled_basis(basis, CollectiveOperator.LOWER).entries
        sz = collective_operator_in_coupled_basis(basis, CollectiveOperator.Z).entries
        labels = basis.label_strings
    else:
        lower = lowering_operator(basis).entries
        sz = sz_operator(basis).entries
        labels = basis.labels
    return OperatorMatrix(lower.conj().T @ lower + sz @ sz - sz, labels)


def displaced_lowering(basis: DickeBasis | CoupledBasis, drive: DriveParams) -> OperatorMatrix:
    """R^- = S^- + i(|Omega|/Gamma) e^{i phi} on the given basis."""
    if drive.gamma <= 0:
        raise ParameterError(f"decay rate must be positive, got {drive.gamma}")
    lower = collective_lowering(basis)
    return OperatorMatrix(
        lower.entries + drive.displacement * np.eye(lower.dim_in), lower.basis_labels
    )


def two_atom_positioned_lowering(xi: float) -> OperatorMatrix:
    """R^- = S1^- cos(xi) + S2^- sin(xi) in the product basis {ee, eg, ge, gg}."""
    identity = np.eye(2)
    matrix = math.cos(xi) * np.kron(SIGMA_MINUS, identity) + math.sin(xi) * np.kron(
        identity, SIGMA_MINUS
    )
    return OperatorMatrix(matrix, product_labels(2))


def kernel(operator: OperatorMatrix, tol: float = 1e-10) -> list[Ket]:
    """Orthonormal basis of the null space: right singular vectors with singular value < tol."""
    if not operator.is_square:
        raise ShapeError(f"kernel needs a square operator, got {operator.entries.shape}")
    _, singular_values, vh = np.linalg.svd(operator.entries)
    rank = int(np.sum(singular_values >= tol))
    return [Ket(vector.conj(), operator.basis_labels) for vector in vh[rank:]]


def bell_states() -> dict[str, Ket]:
    """Phi+-, Psi+- over {ee, eg, ge, gg}."""
    root = 1 / math.sqrt(2)
    labels = product_labels(2)
    return {
        "phi_plus": Ket(root * np.array([1, 0, 0, 1]), labels),
        "phi_minus": Ket(root * np.array([1, 0, 0, -1]), labels),
        "psi_plus": Ket(root * np.array([0, 1, 1, 0]), labels),
        "psi_minus": Ket(root * np.array([0, 1, -1, 0]), labels),
    }


def four_particle_reference_states() -> dict[str, Ket]:
    """The explicit four-atom coupled states, written out over bare product states."""
    patterns = {
        "|2,2⟩_1": ({"eeee": 1}, 1.0),
        "|2,-2⟩_1": ({"gggg": 1}, 1.0),
        "|2,0⟩_1": (
            {"eegg": 1, "egeg": 1, "geeg": 1, "egge": 1, "gege": 1, "ggee": 1},
            math.sqrt(6),
        ),
        "|0,0⟩_1": (
            {"eegg": 2, "egeg": -1, "geeg": -1, "egge": -1, "gege": -1, "ggee": 2},
            2 * math.sqrt(3),
        ),
        "|0,0⟩_2": ({"egeg": 1, "egge": -1, "geeg": -1, "gege": 1}, 2.0),
        "|1,0⟩_1": ({"eegg": 1, "ggee": -1}, math.sqrt(2)),
        "|1,0⟩_2": ({"egeg": 1, "egge": -1, "geeg": 1, "gege": -1}, 2.0),
        "|1,0⟩_3": ({"egeg": 1, "egge": 1, "geeg": -1, "gege": -1}, 2.0),
    }
    states = {}
    for name, (weights, norm) in patterns.items():
        vector = sum(
            weight * product_ket(pattern).amplitudes for pattern, weight in weights.items()
        )
        states[name] = Ket(vector / norm, product_labels(4))
    return states


def to_coupled_basis(rho: DensityMatrix, basis: CoupledBasis) -> DensityMatrix:
    if rho.dim != basis.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} vs basis dimension {basis.dim}")
    unitary = basis.unitary.entries
    return DensityMatrix.from_numeric(
        unitary @ rho.entries @ unitary.conj().T, basis.label_strings, rho.tolerances
    )


def to_product_basis(rho: DensityMatrix, basis: CoupledBasis) -> DensityMatrix:
    if rho.dim != basis.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} vs basis dimension {basis.dim}")
    unitary = basis.unitary.entries
    return DensityMatrix.from_numeric(
        unitary.conj().T @ rho.entries @ unitary, product_labels(basis.n_particles), rho.tolerances
    )


def sector_weights(
    rho_coupled: DensityMatrix, basis: CoupledBasis
) -> dict[tuple[float, int], float]:
    """tr(P rho P) per (S, copy) sector of a state given in the coupled basis."""
    diagonal = rho_coupled.diagonal()
    return {
        sector: float(np.sum(diagonal[basis.sector_indices(*sector)]))
        for sector in basis.sector_keys()
    }
