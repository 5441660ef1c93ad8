import logging
import math
import warnings

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.linalg import expm

from src.physics.errors import (
    DegenerateSteadyStateError,
    DimensionMismatchError,
    KernelExistsError,
    ParameterError,
    ShapeError,
    TruncationWarning,
)
from src.physics.lindblad import (
    CavityParams,
    Liouvillian,
    ModelTag,
    analytic_steady_state,
    atomic_state,
    build_cavity_liouvillian,
    build_driven_collective,
    build_two_atom_reduced,
    cavity_initial_state,
    check_fock_convergence,
    lindblad_superoperator,
    photon_number,
    relax_to_steady_state,
    steady_state_from_initial,
    unvec,
    vec,
)
from src.physics.spin import (
    DickeBasis,
    DriveParams,
    build_coupled_basis,
    displaced_lowering,
    product_ket,
    sector_weights,
    to_coupled_basis,
)
from src.physics.state import DensityMatrix, OperatorMatrix, trace_distance
from src.physics.werner import (
    analytic_steady_populations,
    dark_entangled_state,
    predicted_two_atom_mixture,
    two_atom_initial_ket,
)
from tests.helpers import random_density

SPIN_ONE = DickeBasis.from_spin(1)


def all_models() -> list[Liouvillian]:
    return [
        build_cavity_liouvillian(CavityParams(g=1.0, kappa=2.0, xi=0.3, n_max=2)),
        build_two_atom_reduced(math.pi / 3, 1.5),
        build_driven_collective(SPIN_ONE, DriveParams(omega_abs=2.0, phi=0.4)),
        build_driven_collective(build_coupled_basis(4), DriveParams(omega_abs=1.0)),
    ]


class TestVectorization:
    def test_column_stacking(self, rng):
        a, x, b = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
        np.testing.assert_allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x), atol=1e-12)
        np.testing.assert_array_equal(unvec(vec(x), 3), x)

    def test_rejects_non_square_superoperator(self):
        with pytest.raises(ShapeError):
            Liouvillian(np.zeros((3, 3)), ModelTag.TWO_ATOM_REDUCED, ("a", "b"))

    def test_apply_checks_dimension(self):
        with pytest.raises(DimensionMismatchError):
            build_two_atom_reduced(0.2).apply(DensityMatrix.maximally_mixed(2))


class TestGeneratorStructure:
    @pytest.mark.parametrize("index", range(4))
    def test_trace_preserving(self, index):
        assert all_models()[index].trace_residual() < 1e-12

    @pytest.mark.parametrize("index", range(4))
    def test_hermiticity_preserving(self, rng, index):
        liouvillian = all_models()[index]
        rate = liouvillian.apply(random_density(rng, liouvillian.dim))
        np.testing.assert_allclose(rate, rate.conj().T, atol=1e-12)

    def test_dissipator_rate_convention(self):
        lower = np.array([[0, 0], [1, 0]], dtype=complex)
        matrix = lindblad_superoperator(None, [(1.0, lower)], dim=2)
        excited = vec(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(unvec(matrix @ excited, 2), np.diag([-2.0, 2.0]))


class TestDrivenCollective:
    @pytest.mark.parametrize("omega", [0.0, 0.5, 5.0])
    def test_singlet_is_stationary(self, omega):
        basis = build_coupled_basis(2)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=omega))
        singlet = basis.unitary.entries @ basis.state(0, 0).amplitudes
        rate = liouvillian.apply(np.outer(singlet, singlet.conj()))
        assert np.max(np.abs(rate)) < 1e-12

    def test_undriven_spin_half_decays_at_twice_gamma(self):
        liouvillian = build_driven_collective(DickeBasis.from_spin(0.5), DriveParams())
        excited = vec(np.diag([1.0, 0.0]).astype(complex))
        for t in (0.1, 0.5, 1.0, 2.0):
            population = unvec(expm(liouvillian.matrix * t) @ excited, 2)[0, 0].real
            assert population == pytest.approx(math.exp(-2 * t), abs=1e-12)

    @pytest.mark.parametrize("omega", [0.3, 1.0, 2.0, 10.0])
    @pytest.mark.parametrize("phi", [0.0, 0.7])
    def test_equals_dissipator_of_displaced_operator(self, omega, phi):
        drive = DriveParams(omega_abs=omega, phi=phi)
        r_minus = displaced_lowering(SPIN_ONE, drive).entries
        expected = lindblad_superoperator(None, [(1.0, r_minus)])
        np.testing.assert_allclose(
            build_driven_collective(SPIN_ONE, drive).matrix, expected, atol=1e-10
        )

    def test_sector_metadata(self):
        basis = build_coupled_basis(4)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=1.0))
        assert liouvillian.sector_keys == basis.sector_keys()
        assert len(liouvillian.sector_projectors) == 6
        total = sum(projector.entries for projector in liouvillian.sector_projectors)
        np.testing.assert_array_equal(total, np.eye(16))


class TestReducedModel:
    def test_rejects_non_positive_gamma(self):
        with pytest.raises(ParameterError):
            build_two_atom_reduced(0.1, 0.0)

    @pytest.mark.parametrize("xi", [0.0, 0.4, math.pi / 4, 1.1])
    def test_kernel_states_are_stationary(self, xi):
        liouvillian = build_two_atom_reduced(xi)
        for ket in (dark_entangled_state(xi), product_ket("gg")):
            assert np.max(np.abs(liouvillian.apply(ket.projector()))) < 1e-12

    def test_ground_state_does_not_move(self):
        liouvillian = build_two_atom_reduced(0.8)
        ground = product_ket("gg").projector().entries
        final = unvec(expm(liouvillian.matrix * 7.0) @ vec(ground), 4)
        np.testing.assert_allclose(final, ground, atol=1e-12)


class TestSteadyState:
    def test_symmetric_mixing_from_eg(self):
        steady = steady_state_from_initial(
            build_two_atom_reduced(math.pi / 4), product_ket("eg").projector()
        )
        expected = predicted_two_atom_mixture(math.pi / 4, math.pi / 2)
        assert trace_distance(steady, expected) < 1e-9
        assert steady.population(3) == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("start, dark_weight", [("eg", 0.75), ("ge", 0.25)])
    def test_asymmetric_mixing(self, start, dark_weight):
        xi = math.pi / 3
        liouvillian = build_two_atom_reduced(xi)
        steady = steady_state_from_initial(liouvillian, product_ket(start).projector())
        dark = dark_entangled_state(xi).amplitudes
        assert np.vdot(dark, steady.entries @ dark).real == pytest.approx(dark_weight, abs=1e-9)
        assert steady.population(3) == pytest.approx(1 - dark_weight, abs=1e-9)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.0])
    def test_general_initial_mixture(self, theta):
        xi = 0.6
        steady = steady_state_from_initial(
            build_two_atom_reduced(xi), two_atom_initial_ket(theta).projector()
        )
        assert trace_distance(steady, predicted_two_atom_mixture(xi, theta)) < 1e-9

    def test_driven_triplet_matches_closed_form(self):
        liouvillian = build_driven_collective(SPIN_ONE, DriveParams(omega_abs=5.0))
        steady = steady_state_from_initial(liouvillian, SPIN_ONE.ket(0).projector())
        np.testing.assert_allclose(
            steady.diagonal(), analytic_steady_populations(5.0).as_array(), atol=1e-9
        )

    def test_strong_drive_equalizes_populations(self):
        liouvillian = build_driven_collective(SPIN_ONE, DriveParams(omega_abs=1e3))
        steady = steady_state_from_initial(liouvillian, SPIN_ONE.ket(1).projector())
        np.testing.assert_allclose(steady.diagonal(), np.full(3, 1 / 3), atol=1e-5)

    def test_singlet_returned_unchanged(self):
        basis = build_coupled_basis(2)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=3.0))
        singlet = to_coupled_basis(basis.state(0, 0).projector(), basis)
        steady = steady_state_from_initial(liouvillian, singlet)
        np.testing.assert_allclose(steady.entries, singlet.entries, atol=1e-12)

    @pytest.mark.parametrize(
        "liouvillian, rho0",
        [
            (
                build_driven_collective(SPIN_ONE, DriveParams(omega_abs=5.0)),
                SPIN_ONE.ket(0).projector(),
            ),
            (build_two_atom_reduced(math.pi / 3), product_ket("eg").projector()),
        ],
        ids=["driven_triplet", "reduced_pair"],
    )
    def test_agrees_with_relaxation(self, liouvillian, rho0):
        exact = steady_state_from_initial(liouvillian, rho0)
        relaxed = relax_to_steady_state(liouvillian, rho0)
        assert trace_distance(exact, relaxed) < 1e-8

    def test_driven_pair_agrees_with_relaxation(self):
        basis = build_coupled_basis(2)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=2.0))
        rho0 = to_coupled_basis(two_atom_initial_ket(0.3).projector(), basis)
        exact = steady_state_from_initial(liouvillian, rho0)
        assert trace_distance(exact, relax_to_steady_state(liouvillian, rho0)) < 1e-8

    @pytest.mark.parametrize("omega", [0.0, 0.8, 1.0, 5.0, 1e3])
    def test_four_atom_sectors(self, rng, omega):
        basis = build_coupled_basis(4)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=omega, phi=0.3))
        rho0 = random_density(rng, 16)
        steady = steady_state_from_initial(liouvillian, rho0)
        assert np.max(np.abs(liouvillian.apply(steady))) < 1e-9 * max(omega, 1.0)
        assert sector_weights(steady, basis) == pytest.approx(
            sector_weights(rho0, basis), abs=1e-10
        )
        # both singlet blocks are frozen, and so is the coherence between them
        first, second = basis.index(0, 0, 1), basis.index(0, 0, 2)
        expected = rho0.entries[first, second]
        assert steady.entries[first, second] == pytest.approx(expected, abs=1e-10)

    def test_four_atom_agrees_with_relaxation(self):
        basis = build_coupled_basis(4)
        liouvillian = build_driven_collective(basis, DriveParams(omega_abs=2.0))
        rho0 = to_coupled_basis(product_ket("eegg").projector(), basis)
        exact = steady_state_from_initial(liouvillian, rho0)
        assert trace_distance(exact, relax_to_steady_state(liouvillian, rho0)) < 1e-8

    def test_frozen_sector_relaxes_instead(self, caplog):
        frozen = Liouvillian(
            np.zeros((4, 4)),
            ModelTag.DRIVEN_COLLECTIVE,
            ("a", "b"),
            sector_projectors=(OperatorMatrix.identity(2),),
            sector_keys=((0.5, 1),),
        )
        rho0 = DensityMatrix(np.diag([0.25, 0.75]))
        with caplog.at_level(logging.WARNING, logger="src.physics.lindblad"):
            steady = steady_state_from_initial(frozen, rho0)
        np.testing.assert_allclose(steady.entries, rho0.entries)
        assert "4 stationary states" in caplog.text

    def test_leaking_sectors_relax_instead(self, caplog):
        reduced = build_two_atom_reduced(0.7)
        mislabelled = Liouvillian(
            reduced.matrix,
            ModelTag.TWO_ATOM_REDUCED,
            reduced.basis_labels,
            sector_projectors=(
                OperatorMatrix(np.diag([1.0, 1.0, 0.0, 0.0])),
                OperatorMatrix(np.diag([0.0, 0.0, 1.0, 1.0])),
            ),
            sector_keys=((1.0, 1), (0.0, 1)),
        )
        rho0 = product_ket("eg").projector()
        with caplog.at_level(logging.WARNING, logger="src.physics.lindblad"):
            steady = steady_state_from_initial(mislabelled, rho0)
        assert "not conserved" in caplog.text
        assert trace_distance(steady, steady_state_from_initial(reduced, rho0)) < 1e-8

    def test_undamped_motion_never_settles(self):
        flip = np.array([[0, 1], [1, 0]], dtype=complex)
        rotating = Liouvillian(
            lindblad_superoperator(flip, []), ModelTag.DRIVEN_COLLECTIVE, ("a", "b")
        )
        with pytest.raises(DegenerateSteadyStateError) as info:
            relax_to_steady_state(rotating, DensityMatrix(np.diag([1.0, 0.0])), max_doublings=8)
        assert info.value.diagnostics["elapsed"] == pytest.approx(2.0**8)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            steady_state_from_initial(build_two_atom_reduced(0.3), DensityMatrix.maximally_mixed(3))


class TestAnalyticSteadyState:
    def test_unit_drive(self):
        r_minus = displaced_lowering(SPIN_ONE, DriveParams(omega_abs=1.0))
        steady = analytic_steady_state(r_minus)
        np.testing.assert_allclose(steady.diagonal(), [1 / 11, 3 / 11, 7 / 11], atol=1e-12)

    @pytest.mark.parametrize("omega", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
    def test_is_stationary(self, omega):
        drive = DriveParams(omega_abs=omega)
        steady = analytic_steady_state(displaced_lowering(SPIN_ONE, drive))
        rate = build_driven_collective(SPIN_ONE, drive).apply(steady)
        assert np.max(np.abs(rate)) < 1e-9
        np.testing.assert_allclose(
            steady.diagonal(), analytic_steady_populations(omega).as_array(), atol=1e-10
        )

    @pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
    def test_spin_half_saturation(self, omega):
        r_minus = displaced_lowering(DickeBasis.from_spin(0.5), DriveParams(omega_abs=omega))
        excited = analytic_steady_state(r_minus).population(0)
        assert excited == pytest.approx(omega**2 / (2 * omega**2 + 1), abs=1e-12)

    def test_spin_half_strong_drive(self):
        r_minus = displaced_lowering(DickeBasis.from_spin(0.5), DriveParams(omega_abs=1e4))
        np.testing.assert_allclose(analytic_steady_state(r_minus).diagonal(), [0.5, 0.5], atol=1e-6)

    def test_identity_gives_maximally_mixed(self):
        steady = analytic_steady_state(OperatorMatrix.identity(3))
        np.testing.assert_allclose(steady.entries, np.eye(3) / 3, atol=1e-12)

    def test_singular_operator(self):
        with pytest.raises(KernelExistsError):
            analytic_steady_state(displaced_lowering(SPIN_ONE, DriveParams()))

    def test_rectangular_operator(self):
        with pytest.raises(ShapeError):
            analytic_steady_state(OperatorMatrix(np.ones((2, 3))))


class TestCavityModel:
    def test_rejects_empty_truncation(self):
        with pytest.raises(ValidationError):
            CavityParams(g=1.0, kappa=1.0, n_max=0)

    def test_gamma_eff(self):
        assert CavityParams(g=2.0, kappa=8.0).gamma_eff == pytest.approx(0.5)

    def test_decoupled_atoms_are_stationary(self):
        params = CavityParams(g=0.0, kappa=1.0, n_max=3)
        liouvillian = build_cavity_liouvillian(params)
        assert liouvillian.dim == 16
        rho = cavity_initial_state(product_ket("ee"), params.n_max)
        assert np.max(np.abs(liouvillian.apply(rho))) < 1e-12

    def test_photon_number_stays_below_one(self):
        params = CavityParams(g=1.0, kappa=0.5, n_max=3)
        liouvillian = build_cavity_liouvillian(params)
        state = vec(cavity_initial_state(product_ket("eg"), params.n_max).entries)
        step = expm(liouvillian.matrix * 0.1)
        for _ in range(100):
            state = step @ state
            rho = DensityMatrix.from_numeric(unvec(state, liouvillian.dim))
            assert photon_number(rho, params.n_max) <= 1 + 1e-9

    def test_atomic_state_of_vacuum_product(self):
        rho = cavity_initial_state(product_ket("eg"), 2)
        np.testing.assert_allclose(
            atomic_state(rho, 2).entries, product_ket("eg").projector().entries, atol=1e-12
        )
        assert photon_number(rho, 2) == pytest.approx(0.0)

    def test_fock_truncation_converged_for_single_excitation(self):
        params = CavityParams(g=1.0, kappa=2.0, xi=0.4, n_max=2)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_fock_convergence(params, product_ket("eg")) < 1e-8

    def test_fock_truncation_warns(self):
        params = CavityParams(g=1.0, kappa=2.0, xi=0.4, n_max=1)
        with pytest.warns(TruncationWarning):
            check_fock_convergence(params, product_ket("eg"), extra=1, tol=-1.0)
