"""Named experiments. Every use case returns a ResultTable, formatting is left to a ResultSink."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
from scipy.special import xlogy

from src import __version__
from src.configs import ConfigError, EngineSettings, InitialPreset, IntegratorChoice, Observable
from src.configs.scenario import ScenarioConfig, build_scenario
from src.physics.errors import (
    DegenerateNormalizationError,
    DegenerateSteadyStateError,
    ParameterError,
    WernerSimError,
)
from src.physics.evolution import RENORMALIZE_ABOVE
from src.physics.lindblad import (
    NULL_TOL,
    CavityParams,
    Liouvillian,
    ModelTag,
    atomic_state,
    build_cavity_liouvillian,
    build_driven_collective,
    build_two_atom_reduced,
    cavity_initial_state,
    check_fock_convergence,
    photon_number,
    steady_state_from_initial,
)
from src.physics.spin import (
    CoupledBasis,
    DickeBasis,
    DriveParams,
    bell_states,
    build_coupled_basis,
    product_ket,
    product_labels,
    sector_weights,
    spin_label,
    to_coupled_basis,
    to_product_basis,
)
from src.physics.state import (
    ENGINE,
    DensityMatrix,
    Ket,
    fidelity_with_pure,
    purity,
    trace_distance,
    von_neumann_entropy,
    von_neumann_entropy_paper,
)
from src.physics.werner import (
    CHSH_THRESHOLD,
    PURIFICATION_THRESHOLD,
    WernerSpec,
    analytic_steady_populations,
    beta,
    classify_fidelity,
    dark_entangled_state,
    fidelity_from_theta,
    four_particle_initial_ket,
    four_particle_prediction,
    generalized_werner_state,
    normalized_triplet_weight,
    steady_entropy_paper,
    theta_for_fidelity,
    two_atom_initial_ket,
    werner_entropy_paper,
    werner_state,
)
from src.ports import Integrator, ResultTable

logger = logging.getLogger(__name__)

LN_ONE_THIRD = math.log(1 / 3)
FIGURE_1B_GRID = tuple(float(x) for x in np.geomspace(0.05, 100.0, 60))
ELIMINATION_RATIOS = (0.2, 0.1, 0.05, 0.025)
DIAGNOSTIC_COLUMNS = ("trace_error", "min_eig", "hermiticity_error")
BELL_OBSERVABLES = {
    Observable.SINGLET: "psi_minus",
    Observable.PSI_PLUS: "psi_plus",
    Observable.PHI_PLUS: "phi_plus",
    Observable.PHI_MINUS: "phi_minus",
}


@dataclass(frozen=True)
class PreparedModel:
    liouvillian: Liouvillian
    rho0: DensityMatrix
    # full state -> atomic state in the product basis {e, g}^n
    to_atoms: Callable[[DensityMatrix], DensityMatrix]
    basis: CoupledBasis | None = None
    n_max: int | None = None
    # atomic steady-state distance between n_max and n_max + 5
    fock_distance: float | None = None


@contextmanager
def scenario_context(name: str) -> Iterator[None]:
    """Prefix engine errors with the scenario they came from."""
    try:
        yield
    except ConfigError:
        raise
    except DegenerateSteadyStateError as exc:
        raise DegenerateSteadyStateError(f"{name}: {exc}", exc.diagnostics) from exc
    except WernerSimError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _check_grid(grid: Sequence[float]) -> list[float]:
    values = [float(x) for x in grid]
    if not values:
        raise ParameterError("drive grid is empty")
    negative = [x for x in values if x < 0]
    if negative:
        raise ParameterError(f"drive grid has negative entries: {negative}")
    return values


def _check_not_singlet(fidelity: float) -> None:
    if math.isclose(fidelity, 1.0, abs_tol=1e-12):
        raise DegenerateNormalizationError("initial state is a pure singlet, 1 - F = 0")


def initial_ket(config: ScenarioConfig) -> Ket:
    theta = config.parameters.theta
    match config.initial_state:
        case InitialPreset.EG:
            return product_ket("eg")
        case InitialPreset.GE:
            return product_ket("ge")
        case InitialPreset.THETA_SUPERPOSITION:
            return two_atom_initial_ket(theta)
        case InitialPreset.FOUR_PARTICLE_THETA:
            return four_particle_initial_ket(theta)
        case InitialPreset.CUSTOM_AMPLITUDES:
            amplitudes = np.array(config.amplitudes, dtype=complex)
            return Ket(amplitudes, product_labels(config.n_atoms), normalized=False).normalize()
    raise ConfigError("initial_state", f"unsupported preset {config.initial_state}")


class ScenarioTools:
    def __init__(
        self,
        integrator: Integrator,
        settings: EngineSettings,
        integrators: Mapping[IntegratorChoice, Integrator] | None = None,
    ) -> None:
        self.__integrator = integrator
        self.__settings = settings
        self.__integrators = dict(integrators or {})

    def tolerance_report(self) -> dict[str, float]:
        return {
            "rtol": self.__settings.rtol,
            "atol": self.__settings.atol,
            "stiffness_threshold": self.__settings.stiffness_threshold,
            "state_hermiticity": ENGINE.hermiticity,
            "state_trace": ENGINE.trace,
            "state_min_eigenvalue": ENGINE.min_eigenvalue,
            "renormalize_above": RENORMALIZE_ABOVE,
            "null_space_tol": NULL_TOL,
        }

    def __metadata(self, scenario: str, config: dict, **extra) -> dict:
        return {
            "scenario": scenario,
            "config": config,
            "engine_version": __version__,
            "integrator": self.__settings.integrator.value,
            "tolerances": self.tolerance_report(),
            **extra,
        }

    def __integrator_for(self, choice: IntegratorChoice | None) -> Integrator:
        if choice is None:
            return self.__integrator
        return self.__integrators.get(choice, self.__integrator)

    def prepare(self, config: ScenarioConfig) -> PreparedModel:
        """Build the Liouvillian and the initial state a scenario describes."""
        params = config.parameters
        ket = initial_ket(config)
        if config.model is ModelTag.DRIVEN_COLLECTIVE:
            basis = build_coupled_basis(params.n_particles)
            drive = DriveParams(
                omega_abs=params.omega_over_gamma * params.gamma, phi=params.phi, gamma=params.gamma
            )
            return PreparedModel(
                build_driven_collective(basis, drive),
                to_coupled_basis(ket.projector(), basis),
                lambda rho: to_product_basis(rho, basis),
                basis=basis,
            )
        if config.model is ModelTag.TWO_ATOM_REDUCED:
            return PreparedModel(
                build_two_atom_reduced(params.xi, params.gamma), ket.projector(), lambda rho: rho
            )

        n_max = params.n_max or self.__settings.n_max
        cavity = CavityParams(g=params.g, kappa=params.kappa, xi=params.xi, n_max=n_max)
        distance = check_fock_convergence(cavity, ket)
        logger.info("%s: Fock truncation check at n_max=%d: %.3e", config.name, n_max, distance)
        return PreparedModel(
            build_cavity_liouvillian(cavity),
            cavity_initial_state(ket, n_max),
            lambda rho: atomic_state(rho, n_max),
            n_max=n_max,
            fock_distance=distance,
        )

    @staticmethod
    def __observable_columns(config: ScenarioConfig, model: PreparedModel) -> list[str]:
        columns = []
        for observable in config.outputs:
            if observable is Observable.POPULATIONS:
                columns.extend(f"p[{label}]" for label in product_labels(config.n_atoms))
            elif observable is Observable.SECTOR_WEIGHTS:
                columns.extend(
                    f"w[{spin_label(spin)},{copy}]" for spin, copy in model.basis.sector_keys()
                )
            else:
                columns.append(observable.value)
        return columns

    @staticmethod
    def __observable_values(
        config: ScenarioConfig, model: PreparedModel, rho: DensityMatrix, initial_fidelity: float
    ) -> list[float]:
        atoms = model.to_atoms(rho)
        bell = bell_states()
        values: list[float] = []
        for observable in config.outputs:
            match observable:
                case Observable.POPULATIONS:
                    values.extend(float(p) for p in atoms.diagonal())
                case Observable.SECTOR_WEIGHTS:
                    values.extend(sector_weights(rho, model.basis).values())
                case Observable.PURITY:
                    values.append(purity(atoms))
                case Observable.ENTROPY_PAPER:
                    values.append(von_neumann_entropy_paper(atoms))
                case Observable.PSI_PLUS_NORM:
                    values.append(normalized_triplet_weight(atoms, initial_fidelity))
                case Observable.FIDELITY_PSIE:
                    dark = dark_entangled_state(config.parameters.xi)
                    values.append(fidelity_with_pure(atoms, dark))
                case Observable.GG_POPULATION:
                    values.append(atoms.population(3))
                case Observable.PHOTON_NUMBER:
                    values.append(photon_number(rho, model.n_max))
                case _:
                    values.append(fidelity_with_pure(atoms, bell[BELL_OBSERVABLES[observable]]))
        return values

    def __run(self, config: ScenarioConfig) -> ResultTable:
        model = self.prepare(config)
        initial_fidelity = math.nan
        if config.n_atoms == 2:
            atoms0 = model.to_atoms(model.rho0)
            initial_fidelity = fidelity_with_pure(atoms0, bell_states()["psi_minus"])
        if Observable.PSI_PLUS_NORM in config.outputs:
            _check_not_singlet(initial_fidelity)

        integrator = self.__integrator_for(config.integrator)
        trajectory = integrator.evolve(model.liouvillian, model.rho0, config.t_final, config.dt_out)
        rows = []
        for time, state, diagnostics in zip(
            trajectory.times, trajectory.states, trajectory.diagnostics
        ):
            rows.append(
                [
                    float(time),
                    *self.__observable_values(config, model, state, initial_fidelity),
                    diagnostics.trace_error,
                    diagnostics.min_eigenvalue,
                    diagnostics.hermiticity_error,
                ]
            )
        logger.info(
            "%s: %d samples with the %s integrator", config.name, len(rows), trajectory.method
        )
        extra = {"method": trajectory.method}
        if model.fock_distance is not None:
            extra["fock_convergence_distance"] = model.fock_distance
        return ResultTable(
            columns=["t", *self.__observable_columns(config, model), *DIAGNOSTIC_COLUMNS],
            rows=rows,
            metadata=self.__metadata(config.name, config.model_dump(mode="json"), **extra),
        )

    def run_scenario(self, config: ScenarioConfig) -> ResultTable:
        with scenario_context(config.name):
            return self.__run(config)

    def figure_1a(
        self,
        theta: float = 0.0,
        omega_over_gamma: float = 5.0,
        t_final: float = 20.0,
        dt_out: float = 0.1,
    ) -> ResultTable:
        """<Psi+|rho(t)|Psi+>/(1 - F) and the other Bell weights for the driven pair."""
        _check_not_singlet(fidelity_from_theta(theta))
        config = build_scenario(
            {
                "name": "fig1a",
                "model": ModelTag.DRIVEN_COLLECTIVE,
                "initial_state": InitialPreset.THETA_SUPERPOSITION,
                "theta": theta,
                "omega_over_gamma": omega_over_gamma,
                "t_final": t_final,
                "dt_out": dt_out,
                "outputs": ["psi_plus_norm", "phi_plus", "phi_minus", "singlet"],
            }
        )
        table = self.run_scenario(config)
        columns = [
            "psi_plus_normalized" if name == "psi_plus_norm" else name for name in table.columns
        ]
        return table.model_copy(update={"columns": columns})

    def figure_1b(self, grid: Sequence[float] | None = None) -> ResultTable:
        """beta(Omega/Gamma) from the closed form, cross-checked against the engine steady state."""
        values = _check_grid(FIGURE_1B_GRID if grid is None else grid)
        basis = DickeBasis.from_spin(1)
        rho0 = basis.ket(0.0).projector()
        rows = []
        with scenario_context("fig1b"):
            for x in values:
                closed = analytic_steady_populations(x).as_array()
                liouvillian = build_driven_collective(basis, DriveParams(omega_abs=x))
                engine = np.clip(steady_state_from_initial(liouvillian, rho0).diagonal(), 0.0, 1.0)
                error = float(np.max(np.abs(engine - closed)))
                b = beta(x)
                rows.append(
                    [
                        x,
                        b,
                        b - LN_ONE_THIRD,
                        *(float(p) for p in closed),
                        float(np.sum(xlogy(engine, engine))),
                        error,
                        1.0 if error > 1e-6 else 0.0,
                    ]
                )
        return ResultTable(
            columns=[
                "omega_over_gamma",
                "beta",
                "beta_minus_ln_one_third",
                "rho11",
                "rho00",
                "rho_m1m1",
                "engine_beta",
                "max_population_error",
                "disagreement",
            ],
            rows=rows,
            metadata=self.__metadata("fig1b", {"grid": values}),
        )

    def four_particle_scenario(
        self,
        theta: float = 0.0,
        omega_over_gamma: float = 1e3,
        t_final: float = 50.0,
        dt_out: float = 0.5,
    ) -> ResultTable:
        """Sector weights of the driven four-atom system next to the generalized Werner state."""
        basis = build_coupled_basis(4)
        keys = basis.sector_keys()
        spins = [label.spin for label in basis.labels]
        copies = [label.copy for label in basis.labels]
        cross_copy = np.array(
            [
                [spins[i] == spins[j] and copies[i] != copies[j] for j in range(basis.dim)]
                for i in range(basis.dim)
            ]
        )

        prediction = four_particle_prediction(theta)
        predicted = generalized_werner_state(prediction, basis).diagonal()
        with scenario_context("four_particle"):
            liouvillian = build_driven_collective(basis, DriveParams(omega_abs=omega_over_gamma))
            rho0 = to_coupled_basis(four_particle_initial_ket(theta).projector(), basis)
            trajectory = self.__integrator.evolve(liouvillian, rho0, t_final, dt_out)
            steady = steady_state_from_initial(liouvillian, rho0)

        rows = []
        for time, state, diagnostics in zip(
            trajectory.times, trajectory.states, trajectory.diagnostics
        ):
            rows.append(
                [
                    float(time),
                    *sector_weights(state, basis).values(),
                    float(np.max(np.abs(state.diagonal() - predicted))),
                    float(np.max(np.abs(state.entries[cross_copy]))),
                    diagnostics.trace_error,
                    diagnostics.min_eigenvalue,
                    diagnostics.hermiticity_error,
                ]
            )
        final = trajectory.final
        return ResultTable(
            columns=[
                "t",
                *(f"w[{spin_label(spin)},{copy}]" for spin, copy in keys),
                "max_diagonal_error",
                "max_cross_copy_coherence",
                *DIAGNOSTIC_COLUMNS,
            ],
            rows=rows,
            metadata=self.__metadata(
                "four_particle",
                {
                    "theta": theta,
                    "omega_over_gamma": omega_over_gamma,
                    "t_final": t_final,
                    "dt_out": dt_out,
                },
                method=trajectory.method,
                prediction=prediction.model_dump(mode="json"),
                labels=list(basis.label_strings),
                final_diagonal=[float(p) for p in final.diagonal()],
                predicted_diagonal=[float(p) for p in predicted],
                steady_state_max_diagonal_error=float(
                    np.max(np.abs(steady.diagonal() - predicted))
                ),
                steady_state_cross_copy_coherence=float(
                    np.max(np.abs(steady.entries[cross_copy]))
                ),
            ),
        )

    def __compare(self, params: CavityParams, t_final: float, dt_out: float) -> tuple[list, str]:
        gamma = params.gamma_eff
        if gamma <= 0:
            raise ParameterError("the reduced model needs g > 0")
        full = build_cavity_liouvillian(params)
        reduced = build_two_atom_reduced(params.xi, gamma)
        ket = product_ket("eg")
        # times are in units of 1/Gamma with Gamma = g^2/kappa
        full_run = self.__integrator.evolve(
            full, cavity_initial_state(ket, params.n_max), t_final / gamma, dt_out / gamma
        )
        reduced_run = self.__integrator.evolve(
            reduced, ket.projector(), t_final / gamma, dt_out / gamma
        )
        dark = dark_entangled_state(params.xi)

        rows = []
        for time, state, reference, diagnostics in zip(
            full_run.times, full_run.states, reduced_run.states, full_run.diagnostics
        ):
            atoms = atomic_state(state, params.n_max)
            rows.append(
                [
                    float(time * gamma),
                    trace_distance(atoms, reference),
                    photon_number(state, params.n_max),
                    fidelity_with_pure(atoms, dark),
                    fidelity_with_pure(reference, dark),
                    atoms.population(3),
                    reference.population(3),
                    diagnostics.trace_error,
                    diagnostics.min_eigenvalue,
                    diagnostics.hermiticity_error,
                ]
            )
        return rows, full_run.method

    def cavity_compare(
        self,
        g: float,
        kappa: float,
        xi: float = math.pi / 4,
        n_max: int | None = None,
        t_final: float = 5.0,
        dt_out: float = 0.25,
    ) -> ResultTable:
        """Full atom-cavity dynamics next to the reduced collective-decay model, from |e,g,0>."""
        params = CavityParams(g=g, kappa=kappa, xi=xi, n_max=n_max or self.__settings.n_max)
        with scenario_context("cavity_compare"):
            distance = check_fock_convergence(params, product_ket("eg"))
            rows, method = self.__compare(params, t_final, dt_out)
        return ResultTable(
            columns=[
                "t",
                "trace_distance",
                "photon_number",
                "full_psiE",
                "reduced_psiE",
                "full_gg",
                "reduced_gg",
                *DIAGNOSTIC_COLUMNS,
            ],
            rows=rows,
            metadata=self.__metadata(
                "cavity_compare",
                {**params.model_dump(), "t_final": t_final, "dt_out": dt_out},
                method=method,
                gamma_eff=params.gamma_eff,
                fock_convergence_distance=distance,
            ),
        )

    def elimination_sweep(
        self,
        ratios: Sequence[float] = ELIMINATION_RATIOS,
        xi: float = math.pi / 4,
        n_max: int = 2,
        t_final: float = 5.0,
    ) -> ResultTable:
        """Full vs reduced atomic state at t_final over a g/kappa grid, holding g^2/kappa = 1."""
        rows = []
        previous = math.inf
        with scenario_context("elimination_sweep"):
            for ratio in ratios:
                if ratio <= 0:
                    raise ParameterError(f"g/kappa must be positive, got {ratio}")
                params = CavityParams(g=1 / ratio, kappa=1 / ratio**2, xi=xi, n_max=n_max)
                compared, _ = self.__compare(params, t_final, t_final)
                distance = compared[-1][1]
                decreasing = 1.0 if distance < previous else 0.0
                rows.append([ratio, params.g, params.kappa, distance, decreasing])
                previous = distance
        return ResultTable(
            columns=["g_over_kappa", "g", "kappa", "trace_distance", "decreasing"],
            rows=rows,
            metadata=self.__metadata(
                "elimination_sweep",
                {"ratios": list(ratios), "xi": xi, "n_max": n_max, "t_final": t_final},
                monotone=all(row[-1] == 1.0 for row in rows),
            ),
        )

    def werner_report(self, fidelity: float) -> ResultTable:
        """The Werner matrix in the product basis plus its classification and entropies."""
        rho = werner_state(WernerSpec(fidelity=fidelity))
        rows = [
            [label, *(float(value.real) for value in rho.entries[index])]
            for index, label in enumerate(rho.basis_labels)
        ]
        return ResultTable(
            columns=["row", *rho.basis_labels],
            rows=rows,
            metadata={
                "scenario": "werner",
                "engine_version": __version__,
                "fidelity": fidelity,
                "classification": classify_fidelity(fidelity).value,
                "entropy_paper": werner_entropy_paper(fidelity),
                "entropy": von_neumann_entropy(rho),
                "purity": purity(rho),
                "theta": theta_for_fidelity(fidelity),
                "purification_threshold": PURIFICATION_THRESHOLD,
                "chsh_threshold": CHSH_THRESHOLD,
            },
        )

    def drive_sweep(self, grid: Sequence[float], theta: float = 0.0) -> ResultTable:
        """
        Steady state of the driven pair for each drive strength, evaluated concurrently.

        Rows follow grid order whatever order the workers finish in.
        """
        values = _check_grid(grid)
        fidelity = fidelity_from_theta(theta)
        _check_not_singlet(fidelity)
        basis = build_coupled_basis(2)
        rho0 = to_coupled_basis(two_atom_initial_ket(theta).projector(), basis)
        singlet = bell_states()["psi_minus"]

        def point(x: float) -> list[float]:
            liouvillian = build_driven_collective(basis, DriveParams(omega_abs=x))
            coupled = steady_state_from_initial(liouvillian, rho0)
            steady = to_product_basis(coupled, basis)
            # the closed form only sees the (S, m) populations, not the triplet coherences
            populations = np.clip(coupled.diagonal(), 0.0, 1.0)
            return [
                x,
                normalized_triplet_weight(steady, fidelity),
                analytic_steady_populations(x).rho00,
                fidelity_with_pure(steady, singlet),
                von_neumann_entropy_paper(steady),
                float(np.sum(xlogy(populations, populations))),
                steady_entropy_paper(fidelity, x),
            ]

        workers = self.__settings.workers
        with scenario_context("sweep"), ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, values))
        return ResultTable(
            columns=[
                "omega_over_gamma",
                "psi_plus_normalized",
                "analytic_rho00",
                "singlet",
                "entropy_paper",
                "population_entropy_paper",
                "entropy_paper_closed_form",
            ],
            rows=rows,
            metadata=self.__metadata("sweep", {"grid": values, "theta": theta}, workers=workers),
        )
