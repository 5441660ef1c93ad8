import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.physics.errors import ParameterError, ShapeError
from src.physics.spin import (
    CollectiveOperator,
    DickeBasis,
    DriveParams,
    bell_states,
    build_coupled_basis,
    clebsch_gordan,
    collective_operator_in_coupled_basis,
    collective_product_operator,
    displaced_lowering,
    four_particle_reference_states,
    kernel,
    lowering_operator,
    product_ket,
    raising_operator,
    sector_weights,
    sz_operator,
    to_coupled_basis,
    to_product_basis,
    total_spin_squared,
    two_atom_positioned_lowering,
)
from src.physics.state import OperatorMatrix
from tests.helpers import random_density


class TestLadderOperators:
    def test_spin_half(self):
        lower = lowering_operator(DickeBasis.from_spin(0.5)).entries
        np.testing.assert_allclose(lower, [[0, 0], [1, 0]])

    def test_spin_one(self):
        lower = lowering_operator(DickeBasis.from_spin(1)).entries
        np.testing.assert_allclose(np.diag(lower, k=-1), [math.sqrt(2), math.sqrt(2)])
        assert np.count_nonzero(lower) == 2

    def test_raising_and_sz(self):
        basis = DickeBasis.from_spin(1)
        lower = lowering_operator(basis).entries
        upper = raising_operator(basis).entries
        np.testing.assert_allclose(upper, lower.conj().T)
        np.testing.assert_allclose(np.diag(sz_operator(basis).entries), [1, 0, -1])
        sz = sz_operator(basis).entries
        np.testing.assert_allclose(upper @ lower - lower @ upper, 2 * sz, atol=1e-12)

    def test_spin_zero(self):
        lower = lowering_operator(DickeBasis.from_spin(0)).entries
        np.testing.assert_array_equal(lower, np.zeros((1, 1)))

    def test_labels(self):
        assert DickeBasis.from_spin(1).labels == ("|1,1⟩", "|1,0⟩", "|1,-1⟩")

    def test_rejects_non_half_integer(self):
        with pytest.raises(ParameterError):
            DickeBasis.from_spin(0.3)

    def test_clebsch_gordan_singlet(self):
        assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == pytest.approx(1 / math.sqrt(2))
        assert clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0, 0) == pytest.approx(-1 / math.sqrt(2))


class TestDisplacedLowering:
    def test_no_drive_is_plain_lowering(self):
        basis = DickeBasis.from_spin(1)
        shifted = displaced_lowering(basis, DriveParams(omega_abs=0.0))
        np.testing.assert_allclose(shifted.entries, lowering_operator(basis).entries)

    def test_spin_one_unit_drive(self):
        basis = DickeBasis.from_spin(1)
        shifted = displaced_lowering(basis, DriveParams(omega_abs=1.0))
        expected = lowering_operator(basis).entries + 1j * np.eye(3)
        np.testing.assert_allclose(shifted.entries, expected)
        assert np.linalg.det(shifted.entries) == pytest.approx(-1j)

    def test_spin_half_with_phase(self):
        basis = DickeBasis.from_spin(0.5)
        shifted = displaced_lowering(basis, DriveParams(omega_abs=2.0, phi=math.pi / 2))
        expected = lowering_operator(basis).entries - 2 * np.eye(2)
        np.testing.assert_allclose(shifted.entries, expected, atol=1e-12)

    def test_rate_scales_displacement(self):
        drive = DriveParams(omega_abs=3.0, gamma=2.0)
        assert drive.displacement == pytest.approx(1.5j)

    def test_rejects_non_positive_gamma(self):
        with pytest.raises(ValidationError):
            DriveParams(omega_abs=1.0, gamma=0.0)


class TestPositionedLowering:
    def test_symmetric_point(self):
        lower = two_atom_positioned_lowering(math.pi / 4).entries
        symmetric = collective_product_operator(2, CollectiveOperator.LOWER).entries
        np.testing.assert_allclose(lower, symmetric / math.sqrt(2), atol=1e-12)

    def test_first_atom_only(self):
        lower = two_atom_positioned_lowering(0.0)
        np.testing.assert_allclose(
            lower.apply(product_ket("eg")).amplitudes, product_ket("gg").amplitudes
        )
        np.testing.assert_allclose(lower.apply(product_ket("ge")).amplitudes, 0.0)

    def test_action_on_doubly_excited(self):
        xi = math.pi / 3
        result = two_atom_positioned_lowering(xi).apply(product_ket("ee")).amplitudes
        expected = (
            math.cos(xi) * product_ket("ge").amplitudes
            + math.sin(xi) * product_ket("eg").amplitudes
        )
        np.testing.assert_allclose(result, expected, atol=1e-12)


class TestKernel:
    @pytest.mark.parametrize("xi", [0.0, math.pi / 6, math.pi / 4, 1.2])
    def test_positioned_lowering(self, xi):
        vectors = kernel(two_atom_positioned_lowering(xi))
        assert len(vectors) == 2
        span = np.array([ket.amplitudes for ket in vectors]).T
        projector = span @ span.conj().T
        dark = (
            math.cos(xi) * product_ket("ge").amplitudes
            - math.sin(xi) * product_ket("eg").amplitudes
        )
        for expected in (dark, product_ket("gg").amplitudes):
            np.testing.assert_allclose(projector @ expected, expected, atol=1e-10)

    def test_driven_spin_one_has_none(self):
        basis = DickeBasis.from_spin(1)
        assert kernel(displaced_lowering(basis, DriveParams(omega_abs=0.7))) == []

    def test_zero_matrix(self):
        vectors = kernel(OperatorMatrix(np.zeros((3, 3))))
        assert len(vectors) == 3
        gram = np.array([[a.inner(b) for b in vectors] for a in vectors])
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_rejects_rectangular(self):
        with pytest.raises(ShapeError):
            kernel(OperatorMatrix(np.zeros((2, 3))))


class TestBellStates:
    def test_orthonormal(self):
        bell = list(bell_states().values())
        gram = np.array([[a.inner(b) for b in bell] for a in bell])
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)

    def test_singlet_is_dark(self):
        lower = collective_product_operator(2, CollectiveOperator.LOWER)
        np.testing.assert_allclose(lower.apply(bell_states()["psi_minus"]).amplitudes, 0.0)

    def test_coupled_images(self):
        basis = build_coupled_basis(2)
        unitary = basis.unitary.entries
        bell = bell_states()
        root = 1 / math.sqrt(2)
        expected = {
            "phi_plus": [root, 0, root, 0],
            "phi_minus": [root, 0, -root, 0],
            "psi_plus": [0, 1, 0, 0],
            "psi_minus": [0, 0, 0, 1],
        }
        for name, amplitudes in expected.items():
            np.testing.assert_allclose(unitary @ bell[name].amplitudes, amplitudes, atol=1e-12)


class TestCoupledBasis:
    def test_two_atom_labels(self):
        labels = build_coupled_basis(2).label_strings
        assert labels == ("|1,1⟩_1", "|1,0⟩_1", "|1,-1⟩_1", "|0,0⟩_1")

    @pytest.mark.parametrize("n_particles", [2, 4, 6])
    def test_unitary(self, n_particles):
        unitary = build_coupled_basis(n_particles).unitary.entries
        np.testing.assert_allclose(unitary @ unitary.conj().T, np.eye(2**n_particles), atol=1e-12)

    def test_four_atom_multiplicities(self):
        assert build_coupled_basis(4).multiplicities() == {2.0: 1, 1.0: 3, 0.0: 2}

    def test_four_atom_copy_order(self):
        basis = build_coupled_basis(4)
        paths = [basis.labels[basis.index(1, 0, copy)].path for copy in (1, 2, 3)]
        assert [(path[2], path[5]) for path in paths] == [(1, 1), (1, 0), (0, 1)]

    def test_four_atom_singlet_amplitude(self):
        basis = build_coupled_basis(4)
        amplitude = product_ket("eegg").inner(basis.state(0, 0, 1))
        assert amplitude == pytest.approx(1 / math.sqrt(3), abs=1e-12)

    @pytest.mark.parametrize("name", list(four_particle_reference_states()))
    def test_reference_states(self, name):
        spin, m = (int(part) for part in name[1:name.index("⟩")].split(","))
        copy = int(name.rsplit("_", 1)[1])
        reference = four_particle_reference_states()[name]
        basis = build_coupled_basis(4)
        assert abs(reference.inner(basis.state(spin, m, copy))) == pytest.approx(1.0, abs=1e-12)

        lower = collective_product_operator(4, CollectiveOperator.LOWER).entries
        sz = collective_product_operator(4, CollectiveOperator.Z).entries
        s2 = lower.conj().T @ lower + sz @ sz - sz
        np.testing.assert_allclose(
            s2 @ reference.amplitudes, spin * (spin + 1) * reference.amplitudes, atol=1e-12
        )

    def test_odd_count(self):
        with pytest.raises(ParameterError):
            build_coupled_basis(3)

    def test_unknown_sector(self):
        with pytest.raises(ParameterError):
            build_coupled_basis(2).sector_indices(2, 1)


class TestCoupledOperators:
    @pytest.mark.parametrize("n_particles", [2, 4])
    @pytest.mark.parametrize("which", list(CollectiveOperator))
    def test_block_diagonal(self, n_particles, which):
        basis = build_coupled_basis(n_particles)
        matrix = collective_operator_in_coupled_basis(basis, which).entries
        sectors = [label.sector for label in basis.labels]
        for row, col in np.ndindex(matrix.shape):
            if sectors[row] != sectors[col]:
                assert abs(matrix[row, col]) < 1e-12

    def test_blocks_are_ladder_operators(self):
        basis = build_coupled_basis(4)
        lower = collective_operator_in_coupled_basis(basis, CollectiveOperator.LOWER).entries
        for spin, copy in basis.sector_keys():
            indices = basis.sector_indices(spin, copy)
            block = lower[np.ix_(indices, indices)]
            expected = lowering_operator(DickeBasis.from_spin(spin)).entries
            np.testing.assert_allclose(block, expected, atol=1e-12)

    def test_quintet_element(self):
        basis = build_coupled_basis(4)
        lower = collective_operator_in_coupled_basis(basis, CollectiveOperator.LOWER).entries
        element = lower[basis.index(2, -1), basis.index(2, 0)]
        assert element == pytest.approx(math.sqrt(6), abs=1e-12)

    def test_sz_of_second_triplet(self):
        basis = build_coupled_basis(4)
        sz = collective_operator_in_coupled_basis(basis, CollectiveOperator.Z).entries
        index = basis.index(1, 0, 2)
        assert sz[index, index] == pytest.approx(0.0, abs=1e-12)

    def test_total_spin_squared(self):
        basis = build_coupled_basis(4)
        s2 = total_spin_squared(basis).entries
        expected = [label.spin * (label.spin + 1) for label in basis.labels]
        np.testing.assert_allclose(s2, np.diag(expected), atol=1e-12)


class TestBasisChange:
    def test_round_trip(self, rng):
        basis = build_coupled_basis(4)
        rho = random_density(rng, 16)
        back = to_product_basis(to_coupled_basis(rho, basis), basis)
        np.testing.assert_allclose(back.entries, rho.entries, atol=1e-12)

    def test_sector_weights_sum_to_one(self, rng):
        basis = build_coupled_basis(4)
        weights = sector_weights(to_coupled_basis(random_density(rng, 16), basis), basis)
        assert len(weights) == 6
        assert sum(weights.values()) == pytest.approx(1.0, abs=1e-12)

    def test_singlet_weight(self):
        basis = build_coupled_basis(2)
        singlet = to_coupled_basis(bell_states()["psi_minus"].projector(), basis)
        assert sector_weights(singlet, basis) == pytest.approx({(1.0, 1): 0.0, (0.0, 1): 1.0})
