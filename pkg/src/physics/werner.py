"""
Closed-form Werner-state constructions and the predictions the engine is checked against.

Entropies here use the sign convention sum(p ln p), which is never positive; the
conventional entropy is its negation (see `src.physics.state.von_neumann_entropy`).
"""

import math
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import xlogy

from src.physics.errors import DegenerateNormalizationError, ParameterError
from src.physics.spin import CoupledBasis, bell_states, product_ket, product_labels
from src.physics.state import DensityMatrix, Ket

PURIFICATION_THRESHOLD = 0.5
CHSH_THRESHOLD = (2 + 3 * math.sqrt(2)) / 8


class FidelityClass(StrEnum):
    CLASSICAL = "classical"
    PURIFIABLE = "purifiable"
    CHSH_VIOLATING = "chsh_violating"


class WernerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    fidelity: float = Field(ge=0.0, le=1.0)


class SectorWeight(BaseModel):
    model_config = ConfigDict(frozen=True)

    spin: float = Field(gt=0.0)
    copy_index: int = Field(1, ge=1)
    weight: float = Field(ge=0.0)


class GeneralizedWernerSpec(BaseModel):
    """
    Singlet fidelity plus the split of the remaining 1 - F over (S, copy) sectors.

    The per-spin weight alpha(S) is the sum over copies of that spin.
    """

    model_config = ConfigDict(frozen=True)

    n_particles: int = Field(ge=2)
    fidelity: float = Field(ge=0.0, le=1.0)
    weights: tuple[SectorWeight, ...]
    singlet_copy: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_weights(self) -> "GeneralizedWernerSpec":
        if self.n_particles % 2:
            raise ValueError(f"n_particles must be even, got {self.n_particles}")
        total = sum(entry.weight for entry in self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"sector weights sum to {total!r}, not 1")
        sectors = [(entry.spin, entry.copy_index) for entry in self.weights]
        if len(set(sectors)) != len(sectors):
            raise ValueError("duplicate (spin, copy) sector in weights")
        largest = self.n_particles // 2
        for spin, _ in sectors:
            if spin > largest or not float(spin).is_integer():
                raise ValueError(f"sector spin {spin} outside 1..{largest}")
        return self

    def alpha(self, spin: float) -> float:
        return sum(entry.weight for entry in self.weights if entry.spin == spin)


class SteadyPopulations(BaseModel):
    """Triplet populations of |1,1>, |1,0>, |1,-1> in the driven steady state."""

    model_config = ConfigDict(frozen=True)

    rho11: float = Field(ge=0.0, le=1.0)
    rho00: float = Field(ge=0.0, le=1.0)
    rho_m1m1: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_sum(self) -> "SteadyPopulations":
        total = self.rho11 + self.rho00 + self.rho_m1m1
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"populations sum to {total!r}")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.rho11, self.rho00, self.rho_m1m1])


def _check_fidelity(fidelity: float) -> None:
    if not 0.0 <= fidelity <= 1.0:
        raise ParameterError(f"fidelity must lie in [0, 1], got {fidelity}")


def werner_state(spec: WernerSpec) -> DensityMatrix:
    """F |Psi-><Psi-| + (1 - F)/3 over the three triplet Bell states."""
    bell = bell_states()
    remainder = (1 - spec.fidelity) / 3
    matrix = spec.fidelity * bell["psi_minus"].projector().entries
    for name in ("psi_plus", "phi_plus", "phi_minus"):
        matrix = matrix + remainder * bell[name].projector().entries
    return DensityMatrix.from_numeric(matrix, product_labels(2))


def fidelity_from_theta(theta: float) -> float:
    """Singlet fidelity of sin(theta)|eg> + cos(theta)|ge>."""
    return (1 - math.sin(2 * theta)) / 2


def theta_for_fidelity(fidelity: float) -> float:
    """Principal-value inverse of `fidelity_from_theta`."""
    _check_fidelity(fidelity)
    return 0.5 * math.asin(1 - 2 * fidelity)


def purifiable_theta_interval(n: int = 0) -> tuple[float, float]:
    """Open interval of theta giving F > 1/2 (sin 2theta < 0), repeated with period pi."""
    return (math.pi / 2 + n * math.pi, math.pi + n * math.pi)


def classify_fidelity(fidelity: float) -> FidelityClass:
    # both thresholds are strict; boundary values fall to the lower class
    _check_fidelity(fidelity)
    if fidelity > CHSH_THRESHOLD:
        return FidelityClass.CHSH_VIOLATING
    if fidelity > PURIFICATION_THRESHOLD:
        return FidelityClass.PURIFIABLE
    return FidelityClass.CLASSICAL


def analytic_steady_populations(omega_over_gamma: float) -> SteadyPopulations:
    """
    Diagonal of the normalised (R^-)^{-1}(R^+)^{-1} on the S = 1 block.

    With u = (Omega/Gamma)^2 / 2 and D = 3u^2 + 2u + 1:
    rho11 = u^2/D, rho00 = u(1 + u)/D, rho_-1-1 = 1 - rho11 - rho00.
    """
    if omega_over_gamma < 0:
        raise ParameterError(f"drive strength must be non-negative, got {omega_over_gamma}")
    u = omega_over_gamma**2 / 2
    denominator = 3 * u * u + 2 * u + 1
    rho11 = u * u / denominator
    rho00 = u * (1 + u) / denominator
    return SteadyPopulations(rho11=rho11, rho00=rho00, rho_m1m1=max(1 - rho11 - rho00, 0.0))


def beta(omega_over_gamma: float) -> float:
    populations = analytic_steady_populations(omega_over_gamma).as_array()
    return float(np.sum(xlogy(populations, populations)))


def steady_entropy_paper(fidelity: float, omega_over_gamma: float) -> float:
    """
    F ln F + (1 - F)[ln(1 - F) + beta].

    Pass `math.inf` as the drive for the strong-drive (Werner) limit, where beta = ln(1/3).
    """
    _check_fidelity(fidelity)
    drive_term = math.log(1 / 3) if math.isinf(omega_over_gamma) else beta(omega_over_gamma)
    rest = 1 - fidelity
    return float(xlogy(fidelity, fidelity) + xlogy(rest, rest) + rest * drive_term)


def werner_entropy_paper(fidelity: float) -> float:
    return steady_entropy_paper(fidelity, math.inf)


def two_atom_initial_ket(theta: float) -> Ket:
    """sin(theta)|e,g> + cos(theta)|g,e>."""
    return Ket(
        math.sin(theta) * product_ket("eg").amplitudes
        + math.cos(theta) * product_ket("ge").amplitudes,
        product_labels(2),
    )


def werner_initial_state(fidelity: float) -> Ket:
    """Pure two-atom state whose singlet fidelity is `fidelity`."""
    return two_atom_initial_ket(theta_for_fidelity(fidelity))


def dark_entangled_state(xi: float) -> Ket:
    """cos(xi)|g,e> - sin(xi)|e,g>, the entangled kernel vector of R^-(xi)."""
    return Ket(
        math.cos(xi) * product_ket("ge").amplitudes - math.sin(xi) * product_ket("eg").amplitudes,
        product_labels(2),
    )


def predicted_two_atom_mixture(xi: float, theta_init: float) -> DensityMatrix:
    """
    Undriven two-atom steady state reached from sin(theta)|e,g> + cos(theta)|g,e>.

    The overlap with the dark state survives; the rest decays into |g,g>.
    """
    dark = dark_entangled_state(xi)
    weight = abs(dark.inner(two_atom_initial_ket(theta_init))) ** 2
    ground = product_ket("gg").projector().entries
    matrix = weight * dark.projector().entries + (1 - weight) * ground
    return DensityMatrix.from_numeric(matrix, product_labels(2))


def four_particle_initial_ket(theta: float) -> Ket:
    """sin(theta)|e,e,g,g> + cos(theta)|g,g,e,e>."""
    return Ket(
        math.sin(theta) * product_ket("eegg").amplitudes
        + math.cos(theta) * product_ket("ggee").amplitudes,
        product_labels(4),
    )


def four_particle_prediction(theta: float) -> GeneralizedWernerSpec:
    s = math.sin(2 * theta)
    alpha_one = 1.5 * (1 - s) / (2 - s)
    return GeneralizedWernerSpec(
        n_particles=4,
        fidelity=(1 + s) / 3,
        weights=(
            SectorWeight(spin=1, copy_index=1, weight=alpha_one),
            SectorWeight(spin=2, copy_index=1, weight=1 - alpha_one),
        ),
    )


def normalized_triplet_weight(rho: DensityMatrix, fidelity: float) -> float:
    """<Psi+|rho|Psi+> / (1 - F) for a state in the product basis."""
    if math.isclose(fidelity, 1.0, abs_tol=1e-12):
        raise DegenerateNormalizationError("initial state is a pure singlet, 1 - F = 0")
    psi_plus = bell_states()["psi_plus"].amplitudes
    return float(np.vdot(psi_plus, rho.entries @ psi_plus).real) / (1 - fidelity)


def generalized_werner_state(spec: GeneralizedWernerSpec, basis: CoupledBasis) -> DensityMatrix:
    """F |0,0>_c<0,0| + (1 - F) sum over sectors of weight/(2S+1) times the sector identity."""
    if basis.n_particles != spec.n_particles:
        raise ParameterError(
            f"spec is for {spec.n_particles} particles, basis has {basis.n_particles}"
        )
    diagonal = np.zeros(basis.dim)
    diagonal[basis.index(0.0, 0.0, spec.singlet_copy)] = spec.fidelity
    for entry in spec.weights:
        indices = basis.sector_indices(entry.spin, entry.copy_index)
        diagonal[indices] += (1 - spec.fidelity) * entry.weight / (2 * entry.spin + 1)
    return DensityMatrix(np.diag(diagonal).astype(complex), basis.label_strings)
