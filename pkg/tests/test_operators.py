"""Operator algebra: tensor products, partial trace, exponentials, JW."""

import numpy as np
import pytest

from oqsim import operators as ops
from oqsim.errors import DimensionError, NumericError, PositivityError

RNG = np.random.default_rng(101)


class TestTensor:
    def test_identity_case(self):
        assert np.allclose(ops.tensor(ops.IDENTITY_2, ops.IDENTITY_2), np.eye(4))

    def test_sigma_z_with_identity(self):
        got = ops.tensor(ops.SIGMA_Z, ops.IDENTITY_2)
        assert np.allclose(got, np.diag([1, 1, -1, -1]))

    def test_flip_both_qubits(self):
        # hand expansion: (sx x sx) |00> = |11>
        ket00 = np.kron(ops.basis_state(2, 0), ops.basis_state(2, 0))
        ket11 = np.kron(ops.basis_state(2, 1), ops.basis_state(2, 1))
        assert np.allclose(ops.tensor(ops.SIGMA_X, ops.SIGMA_X) @ ket00, ket11)

    def test_mixed_product_identity(self):
        a, b = ops.random_hermitian(2, RNG), ops.random_hermitian(3, RNG)
        c, d = ops.random_hermitian(2, RNG), ops.random_hermitian(3, RNG)
        lhs = ops.tensor(a, b) @ ops.tensor(c, d)
        assert np.allclose(lhs, ops.tensor(a @ c, b @ d))

    def test_associativity(self):
        a, b, c = (ops.random_hermitian(2, RNG) for _ in range(3))
        lhs = ops.tensor(ops.tensor(a, b), c)
        rhs = ops.tensor(a, ops.tensor(b, c))
        assert np.abs(lhs - rhs).max() <= 1e-12

    def test_dimension_guard(self):
        big = np.eye(2 ** 8)
        with pytest.raises(DimensionError):
            ops.tensor(big, big)


class TestPartialTrace:
    def test_product_state(self):
        rho_a = ops.random_density(2, RNG)
        rho_b = ops.random_density(3, RNG)
        got = ops.partial_trace(ops.tensor(rho_a, rho_b), (2, 3), keep="A")
        assert np.allclose(got, rho_a)
        got_b = ops.partial_trace(ops.tensor(rho_a, rho_b), (2, 3), keep="B")
        assert np.allclose(got_b, rho_b)

    def test_bell_state_marginal(self):
        bell = (np.kron(ops.basis_state(2, 0), ops.basis_state(2, 0))
                + np.kron(ops.basis_state(2, 1), ops.basis_state(2, 1))) / np.sqrt(2)
        got = ops.partial_trace(ops.projector(bell), (2, 2), keep="A")
        assert np.allclose(got, np.eye(2) / 2)

    def test_trace_preserved(self):
        m = RNG.normal(size=(6, 6)) + 1j * RNG.normal(size=(6, 6))
        for keep in ("A", "B"):
            assert np.isclose(np.trace(ops.partial_trace(m, (2, 3), keep=keep)),
                              np.trace(m))

    def test_adjoint_of_tensoring(self):
        # tr((A x I) m) = tr(A * ptrace_A(m))
        a = ops.random_hermitian(3, RNG)
        m = RNG.normal(size=(6, 6)) + 1j * RNG.normal(size=(6, 6))
        lhs = np.trace(ops.tensor(a, np.eye(2)) @ m)
        rhs = np.trace(a @ ops.partial_trace(m, (3, 2), keep="A"))
        assert np.isclose(lhs, rhs)

    def test_dims_mismatch(self):
        with pytest.raises(DimensionError):
            ops.partial_trace(np.eye(6), (2, 2), keep="A")


class TestMatrixExp:
    def test_zero_matrix(self):
        assert np.allclose(ops.matrix_exp(np.zeros((3, 3)), 2.0), np.eye(3))

    def test_euler_formula_involutory(self):
        theta = 0.3
        got = ops.matrix_exp(-1j * theta * np.asarray(ops.SIGMA_X))
        want = np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * np.asarray(ops.SIGMA_X)
        assert np.abs(got - want).max() < 1e-12
        assert np.isclose(got[0, 0].real, 0.955336, atol=1e-6)

    def test_diagonal(self):
        got = ops.matrix_exp(np.diag([-1.0, -2.0]), 1.0)
        assert np.allclose(got, np.diag([np.exp(-1), np.exp(-2)]))

    def test_inverse_roundtrip_nonnormal(self):
        m = RNG.normal(size=(5, 5)) + 1j * RNG.normal(size=(5, 5))
        prod = ops.matrix_exp(m, 0.7) @ ops.matrix_exp(m, -0.7)
        assert np.abs(prod - np.eye(5)).max() <= 1e-9

    def test_normal_nonhermitian_path(self):
        h = ops.random_hermitian(4, RNG)
        m = -1j * h  # skew-Hermitian, normal
        got = ops.matrix_exp(m, 1.0)
        w, v = np.linalg.eigh(h)
        ref = (v * np.exp(-1j * w)) @ v.conj().T
        assert np.abs(got - ref).max() < 1e-10

    def test_nonfinite_rejected(self):
        bad = np.array([[np.inf, 0], [0, 1]], dtype=complex)
        with pytest.raises(NumericError):
            ops.matrix_exp(bad)


class TestJordanWigner:
    def test_single_mode(self):
        assert np.allclose(ops.jordan_wigner_lowering(1, 1),
                           [[0, 1], [0, 0]])

    def test_two_site_anticommutator(self):
        c1, c2 = ops.jordan_wigner_all(2)
        assert np.abs(c1 @ c2 + c2 @ c1).max() < 1e-14

    def test_three_site_relations(self):
        cs = ops.jordan_wigner_all(3)
        anti = cs[0].conj().T @ cs[2] + cs[2] @ cs[0].conj().T
        assert np.abs(anti).max() < 1e-14
        anti_same = cs[2].conj().T @ cs[2] + cs[2] @ cs[2].conj().T
        assert np.allclose(anti_same, np.eye(8))

    @pytest.mark.parametrize("n_sites", [2, 3, 4, 5, 6])
    def test_full_algebra(self, n_sites):
        cs = ops.jordan_wigner_all(n_sites)
        eye = np.eye(2 ** n_sites)
        for i in range(n_sites):
            for j in range(n_sites):
                cc = cs[i] @ cs[j] + cs[j] @ cs[i]
                assert np.abs(cc).max() < 1e-13
                cdc = cs[i].conj().T @ cs[j] + cs[j] @ cs[i].conj().T
                want = eye if i == j else 0 * eye
                assert np.abs(cdc - want).max() < 1e-13

    def test_out_of_range(self):
        with pytest.raises(DimensionError):
            ops.jordan_wigner_lowering(3, 4)
        with pytest.raises(DimensionError):
            ops.jordan_wigner_lowering(3, 0)


class TestEigendecomposition:
    def test_reconstruction(self):
        m = ops.random_hermitian(6, RNG)
        w, v = ops.eig_hermitian(m)
        assert np.all(np.diff(w) >= 0)
        recon = (v * w) @ v.conj().T
        scale = np.linalg.norm(m)
        assert np.linalg.norm(recon - m) <= 1e-9 * scale

    def test_eigenpairs(self):
        m = ops.random_hermitian(5, RNG)
        w, v = ops.eig_hermitian(m)
        for k in range(5):
            resid = np.linalg.norm(m @ v[:, k] - w[k] * v[:, k])
            assert resid <= 1e-9 * np.linalg.norm(m)


class TestValidation:
    def test_hermitize_symmetrizes(self):
        m = ops.random_hermitian(3, RNG) + 1e-14 * RNG.normal(size=(3, 3))
        h = ops.hermitize(m)
        assert ops.hermiticity_defect(h) == 0.0

    def test_hermitize_rejects(self):
        with pytest.raises(NumericError):
            ops.hermitize(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_density_ok(self):
        rho = ops.check_density(ops.random_density(4, RNG))
        assert np.isclose(np.trace(rho).real, 1.0)

    def test_density_trace_rejected(self):
        with pytest.raises(NumericError):
            ops.check_density(2.0 * ops.random_density(3, RNG))

    def test_density_negative_rejected(self):
        bad = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(PositivityError):
            ops.check_density(bad)


class TestSerialization:
    def test_roundtrip(self):
        m = RNG.normal(size=(4, 4)) + 1j * RNG.normal(size=(4, 4))
        assert np.allclose(ops.matrix_from_json(ops.matrix_to_json(m)), m)

    def test_file_roundtrip(self, tmp_path):
        m = ops.random_hermitian(3, RNG)
        path = tmp_path / "m.json"
        ops.save_matrix(path, m)
        assert np.allclose(ops.load_matrix(path), m)

    def test_bad_payload(self):
        with pytest.raises(DimensionError):
            ops.matrix_from_json({"dim": 2, "re": [1.0], "im": [0.0]})


class TestDistancesAndStates:
    def test_trace_distance_bounds(self):
        a = ops.random_density(4, RNG)
        b = ops.random_density(4, RNG)
        d = ops.trace_distance(a, b)
        assert 0 <= d <= 1 + 1e-12
        assert ops.trace_distance(a, a) < 1e-14

    def test_gibbs_state(self):
        h = np.diag([0.0, 1.0]).astype(complex)
        rho = ops.gibbs_state(h, 2.0)
        assert np.isclose(rho[1, 1].real / rho[0, 0].real, np.exp(-2.0))

    def test_fidelity_pure(self):
        psi = ops.random_state_vector(3, RNG)
        assert np.isclose(ops.state_fidelity(ops.projector(psi), psi), 1.0)
