"""
Liouvillian superoperators for the atom-cavity, reduced two-atom and driven
collective models, plus numerical and operator-inverse steady states.

Vectorization is column-stacking: vec(A X B) = (B^T kron A) vec(X), i.e.
`X.reshape(-1, order="F")`.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import StrEnum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import expm, inv, svd, svdvals

from src.physics.errors import (
    DegenerateSteadyStateError,
    DimensionMismatchError,
    KernelExistsError,
    ParameterError,
    ShapeError,
    TruncationWarning,
)
from src.physics.spin import (
    CoupledBasis,
    DickeBasis,
    DriveParams,
    collective_lowering,
    product_labels,
    two_atom_positioned_lowering,
)
from src.physics.state import (
    DensityMatrix,
    OperatorMatrix,
    STRICT,
    Ket,
    partial_trace,
    tensor,
    trace_distance,
)

logger = logging.getLogger(__name__)

# singular values below NULL_TOL * max(||L||_1, 1) count as zero
NULL_TOL = 1e-10
RELAX_TOL = 1e-11


class ModelTag(StrEnum):
    CAVITY_FULL = "cavity_full"
    TWO_ATOM_REDUCED = "two_atom_reduced"
    DRIVEN_COLLECTIVE = "driven_collective"


class CavityParams(BaseModel):
    """Two atoms in a single leaky mode truncated at n_max photons."""

    model_config = ConfigDict(frozen=True)

    g: float = Field(ge=0.0)
    kappa: float = Field(gt=0.0)
    xi: float = math.pi / 4
    n_max: int = Field(10, ge=1)

    @property
    def gamma_eff(self) -> float:
        """Collective decay rate g^2/kappa left after eliminating the mode."""
        return self.g**2 / self.kappa


def vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    matrix: np.ndarray
    model_tag: ModelTag
    basis_labels: tuple[str, ...]
    sector_projectors: tuple[OperatorMatrix, ...] = ()
    sector_keys: tuple[tuple[float, int], ...] = ()
    factor_dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        dim = math.isqrt(matrix.shape[0])
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or dim * dim != matrix.shape[0]:
            raise ShapeError(f"superoperator must be d^2 x d^2, got {matrix.shape}")
        if len(self.basis_labels) != dim:
            raise ShapeError(f"{len(self.basis_labels)} labels for Hilbert dimension {dim}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        """L[rho] as a d x d matrix."""
        entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
        if entries.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"state shape {entries.shape} vs Liouvillian dim {self.dim}"
            )
        return unvec(self.matrix @ vec(entries), self.dim)

    def trace_residual(self) -> float:
        """max |vec(I)^T L|; zero for a trace-preserving generator."""
        return float(np.max(np.abs(vec(np.eye(self.dim)) @ self.matrix)))

    def norm1(self) -> float:
        return float(np.linalg.norm(self.matrix, 1))


def lindblad_superoperator(
    hamiltonian: np.ndarray | None,
    jumps: Sequence[tuple[float, np.ndarray]],
    dim: int | None = None,
) -> np.ndarray:
    """
    Superoperator of  -i[H, rho] + sum_k rate_k (2 c rho c^+ - c^+c rho - rho c^+c).

    The dissipator is written with the factor 2 on the jump term, so a rate Gamma
    on a single two-level lowering operator empties the upper level at 2*Gamma.
    """
    if dim is None:
        dim = hamiltonian.shape[0] if hamiltonian is not None else jumps[0][1].shape[0]
    identity = np.eye(dim)
    superoperator = np.zeros((dim * dim, dim * dim), dtype=complex)
    if hamiltonian is not None:
        superoperator += -1j * (np.kron(identity, hamiltonian) - np.kron(hamiltonian.T, identity))
    for rate, jump in jumps:
        number = jump.conj().T @ jump
        superoperator += rate * (
            2 * np.kron(jump.conj(), jump)
            - np.kron(identity, number)
            - np.kron(number.T, identity)
        )
    return superoperator


def drive_hamiltonian(s_minus: OperatorMatrix, drive: DriveParams) -> OperatorMatrix:
    """
    H = |Omega| (e^{i phi} S^+ + e^{-i phi} S^-).

    With this sign the driven equation is exactly the pure dissipator in
    R^- = S^- + i(|Omega|/Gamma) e^{i phi}.
    """
    phase = complex(np.exp(1j * drive.phi))
    lower = s_minus.entries
    return OperatorMatrix(
        drive.omega_abs * (phase * lower.conj().T + phase.conjugate() * lower),
        s_minus.basis_labels,
    )


def _annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def _fock_labels(n_max: int) -> tuple[str, ...]:
    return tuple(str(n) for n in range(n_max + 1))


def build_cavity_liouvillian(params: CavityParams) -> Liouvillian:
    """Atoms (x) cavity mode, H = g (R^- a^+ + R^+ a), cavity loss at rate kappa."""
    modes = params.n_max + 1
    lower = tensor(two_atom_positioned_lowering(params.xi), OperatorMatrix.identity(modes))
    field = np.kron(np.eye(4), _annihilation(params.n_max))
    coupling = lower.entries @ field.conj().T
    hamiltonian = params.g * (coupling + coupling.conj().T)
    matrix = lindblad_superoperator(hamiltonian, [(params.kappa, field)])
    labels = tuple(
        f"{atoms}⊗{n}" for atoms in product_labels(2) for n in _fock_labels(params.n_max)
    )
    logger.debug("cavity Liouvillian: dim %d, gamma_eff %.4g", 4 * modes, params.gamma_eff)
    return Liouvillian(matrix, ModelTag.CAVITY_FULL, labels, factor_dims=(4, modes))


def build_two_atom_reduced(xi: float, gamma: float = 1.0) -> Liouvillian:
    """Collective decay of two atoms through R^- = S1^- cos(xi) + S2^- sin(xi)."""
    if gamma <= 0:
        raise ParameterError(f"decay rate must be positive, got {gamma}")
    lower = two_atom_positioned_lowering(xi)
    matrix = lindblad_superoperator(None, [(gamma, lower.entries)], dim=4)
    return Liouvillian(matrix, ModelTag.TWO_ATOM_REDUCED, product_labels(2), factor_dims=(2, 2))


def build_driven_collective(basis: DickeBasis | CoupledBasis, drive: DriveParams) -> Liouvillian:
    s_minus = collective_lowering(basis)
    hamiltonian = drive_hamiltonian(s_minus, drive)
    matrix = lindblad_superoperator(hamiltonian.entries, [(drive.gamma, s_minus.entries)])
    if isinstance(basis, CoupledBasis):
        keys = basis.sector_keys()
        projectors = tuple(basis.sector_projector(*key) for key in keys)
        labels = basis.label_strings
        factor_dims = (2,) * basis.n_particles
    else:
        keys = ((basis.spin, 1),)
        projectors = (OperatorMatrix.identity(basis.dim, basis.labels),)
        labels = basis.labels
        factor_dims = ()
    return Liouvillian(
        matrix,
        ModelTag.DRIVEN_COLLECTIVE,
        labels,
        sector_projectors=projectors,
        sector_keys=keys,
        factor_dims=factor_dims,
    )


def _null_basis(matrix: np.ndarray, scale: float) -> np.ndarray:
    """
    Orthonormal null-space basis, columns.

    The rank cut is absolute: a block of the Liouvillian whose entries are pure
    roundoff (a singlet block built from Clebsch-Gordan sums) is all null.
    """
    _, singular, vh = svd(matrix)
    rank = int(np.count_nonzero(singular > NULL_TOL * scale))
    return vh[rank:].conj().T


def _zero_mode_projection(
    matrix: np.ndarray, initial: np.ndarray, scale: float
) -> tuple[np.ndarray, int]:
    """
    Spectral projection of `initial` onto the null space of `matrix` along its range.

    This is the t -> infinity limit of exp(matrix t) when every other eigenvalue
    has a negative real part.
    """
    right = _null_basis(matrix, scale)
    if right.shape[1] == 0:
        return np.zeros_like(initial), 0
    left = _null_basis(matrix.conj().T, scale)
    if left.shape[1] != right.shape[1]:
        raise DegenerateSteadyStateError(
            "left and right null spaces differ in dimension",
            {"right": right.shape[1], "left": left.shape[1]},
        )
    overlap = left.conj().T @ right
    condition = np.linalg.cond(overlap)
    if condition > 1e8:
        raise DegenerateSteadyStateError(
            "zero eigenvalue is not semisimple", {"nullity": right.shape[1], "condition": condition}
        )
    return right @ np.linalg.solve(overlap, left.conj().T @ initial), right.shape[1]


def _block_indices(rows: np.ndarray, cols: np.ndarray, dim: int) -> np.ndarray:
    return np.array([i + j * dim for j in cols for i in rows], dtype=int)


def _sector_steady_state(liouvillian: Liouvillian, initial: np.ndarray, scale: float) -> np.ndarray:
    dim = liouvillian.dim
    sectors = []
    for projector in liouvillian.sector_projectors:
        entries = projector.entries
        if np.max(np.abs(entries - np.diag(np.diag(entries)))) > 1e-12:
            raise ParameterError("sector projectors must be diagonal in the Liouvillian's basis")
        sectors.append(np.flatnonzero(np.diag(entries).real > 0.5))

    steady = np.zeros(dim * dim, dtype=complex)
    for a, rows in enumerate(sectors):
        for b, cols in enumerate(sectors):
            block = _block_indices(rows, cols, dim)
            outside = np.ones(dim * dim, dtype=bool)
            outside[block] = False
            leak = np.max(np.abs(liouvillian.matrix[np.ix_(outside, block)]), initial=0.0)
            if leak > NULL_TOL * scale:
                raise DegenerateSteadyStateError(
                    "sector projectors are not conserved by the Liouvillian",
                    {
                        "sectors": (liouvillian.sector_keys[a], liouvillian.sector_keys[b]),
                        "leak": leak,
                    },
                )
            sub = liouvillian.matrix[np.ix_(block, block)]
            if a != b:
                steady[block], _ = _zero_mode_projection(sub, initial[block], scale)
                continue

            null = _null_basis(sub, scale)
            if null.shape[1] != 1:
                raise DegenerateSteadyStateError(
                    f"sector {liouvillian.sector_keys[a]} has {null.shape[1]} stationary states",
                    {"sector": liouvillian.sector_keys[a], "nullity": null.shape[1]},
                )
            local = unvec(null[:, 0], len(rows))
            local = local / np.trace(local)
            weight = np.trace(unvec(initial[block], len(rows))).real
            steady[block] = weight * vec(local)
    return steady


def steady_state_from_initial(liouvillian: Liouvillian, rho0: DensityMatrix) -> DensityMatrix:
    """
    Long-time limit of the evolution started from rho0.

    With sector projectors each conserved (S, copy) block keeps the weight it had
    in rho0, and cross-sector coherences are sent to their own t -> infinity limit;
    without them the whole Liouvillian is projected onto its zero eigenspace.
    When that solve fails the state is propagated until it stops moving instead.
    """
    if rho0.dim != liouvillian.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} vs Liouvillian dim {liouvillian.dim}")
    initial = vec(rho0.entries)
    scale = max(liouvillian.norm1(), 1.0)
    try:
        if liouvillian.sector_projectors:
            steady = _sector_steady_state(liouvillian, initial, scale)
        else:
            steady, nullity = _zero_mode_projection(liouvillian.matrix, initial, scale)
            logger.debug("%s: stationary subspace of dimension %d", liouvillian.model_tag, nullity)
            if nullity == 0:
                raise DegenerateSteadyStateError("Liouvillian has no stationary state")
    except DegenerateSteadyStateError as exc:
        logger.warning("%s: %s; relaxing by propagation", liouvillian.model_tag, exc)
        return relax_to_steady_state(liouvillian, rho0, tol=RELAX_TOL * scale)
    residual = float(np.max(np.abs(liouvillian.matrix @ steady)))
    logger.debug("%s steady state residual %.3e", liouvillian.model_tag, residual)
    return DensityMatrix.from_numeric(unvec(steady, liouvillian.dim), liouvillian.basis_labels)


def relax_to_steady_state(
    liouvillian: Liouvillian,
    rho0: DensityMatrix,
    *,
    tol: float = RELAX_TOL,
    initial_time: float = 1.0,
    max_doublings: int = 64,
) -> DensityMatrix:
    """Propagate with exp(L t), doubling t, until max |L vec(rho)| < tol."""
    if rho0.dim != liouvillian.dim:
        raise DimensionMismatchError(f"state dim {rho0.dim} vs Liouvillian dim {liouvillian.dim}")
    initial = vec(rho0.entries)
    propagator = expm(liouvillian.matrix * initial_time)
    elapsed = initial_time
    residual = math.inf
    for _ in range(max_doublings):
        state = propagator @ initial
        residual = float(np.max(np.abs(liouvillian.matrix @ state)))
        if residual < tol:
            logger.debug("relaxed after t = %.4g (residual %.3e)", elapsed, residual)
            relaxed = unvec(state, liouvillian.dim)
            return DensityMatrix.from_numeric(relaxed, liouvillian.basis_labels)
        propagator = propagator @ propagator
        elapsed *= 2
    raise DegenerateSteadyStateError(
        "evolution did not settle", {"elapsed": elapsed, "residual": residual}
    )


def analytic_steady_state(r_minus: OperatorMatrix, max_condition: float = 1e12) -> DensityMatrix:
    """
    Normalised (R^-)^{-1} ((R^-)^{-1})^+.

    It is stationary under the pure dissipator in R^-: with rho = A A^+, A = (R^-)^{-1},
    each of R^+R^- rho, rho R^+R^- and R^- rho R^+ equals the identity.
    """
    if not r_minus.is_square:
        raise ShapeError(f"R^- must be square, got {r_minus.entries.shape}")
    singular_values = svdvals(r_minus.entries)
    smallest, largest = singular_values[-1], singular_values[0]
    condition = largest / smallest if smallest > 0 else math.inf
    if smallest < 1e-12 * max(largest, 1.0) or condition > max_condition:
        raise KernelExistsError(
            f"R^- is singular (condition number {condition:.3e}); "
            "the steady state is the projector onto its kernel"
        )
    logger.debug("R^- condition number %.3e", condition)
    inverse = inv(r_minus.entries)
    rho = inverse @ inverse.conj().T
    return DensityMatrix.from_numeric(rho / np.trace(rho), r_minus.basis_labels, STRICT)


def cavity_initial_state(atoms: DensityMatrix | Ket, n_max: int) -> DensityMatrix:
    """Atomic state with the mode in vacuum."""
    if isinstance(atoms, Ket):
        atoms = atoms.projector()
    vacuum = Ket.basis(n_max + 1, 0, _fock_labels(n_max)).projector()
    return tensor(atoms, vacuum)


def atomic_state(rho: DensityMatrix, n_max: int) -> DensityMatrix:
    return partial_trace(rho, [4, n_max + 1], {0})


def photon_number(rho: DensityMatrix, n_max: int) -> float:
    number = np.kron(np.eye(4), np.diag(np.arange(n_max + 1)))
    return rho.expectation(number).real


def check_fock_convergence(
    params: CavityParams, atoms: DensityMatrix | Ket, extra: int = 5, tol: float = 1e-8
) -> float:
    """
    Compare atomic steady states at n_max and n_max + extra.

    Emits TruncationWarning when they differ by more than tol in trace distance.
    """
    reference = params.model_copy(update={"n_max": params.n_max + extra})
    steady = []
    for candidate in (params, reference):
        liouvillian = build_cavity_liouvillian(candidate)
        full = steady_state_from_initial(liouvillian, cavity_initial_state(atoms, candidate.n_max))
        steady.append(atomic_state(full, candidate.n_max))
    distance = trace_distance(*steady)
    if distance > tol:
        warnings.warn(
            f"Fock truncation n_max={params.n_max} not converged: "
            f"steady states differ by {distance:.3e} at n_max={reference.n_max}",
            TruncationWarning,
            stacklevel=2,
        )
    return distance
