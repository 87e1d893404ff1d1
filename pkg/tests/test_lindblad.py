"""GKSL engine: generator, superoperator, steady states, Kraus, trajectories."""

import numpy as np
import pytest

from oqsim import lindblad as lb
from oqsim import operators as ops
from oqsim.errors import DimensionError, KrausError, SizeLimitError

RNG = np.random.default_rng(202)

SM = np.asarray(ops.SIGMA_MINUS)
SP = np.asarray(ops.SIGMA_PLUS)
SZ = np.asarray(ops.SIGMA_Z)


def amplitude_damping(gamma=1.0, omega0=1.0):
    return lb.LindbladModel(hamiltonian=0.5 * omega0 * SZ,
                            jumps=(np.sqrt(gamma) * SM,))


def thermal_qubit(gamma_down, gamma_up, omega0=1.0):
    return lb.LindbladModel(
        hamiltonian=np.diag([0.0, omega0]).astype(complex),
        jumps=(np.sqrt(gamma_down) * SM, np.sqrt(gamma_up) * SP))


class TestApplyGenerator:
    def test_zero_generator(self):
        m = lb.LindbladModel(hamiltonian=np.zeros((2, 2)))
        rho = ops.random_density(2, RNG)
        assert np.abs(lb.apply_generator(m, rho)).max() == 0.0

    def test_amplitude_damping_action(self):
        m = lb.LindbladModel(hamiltonian=np.zeros((2, 2)), jumps=(SM,))
        rho = ops.projector(ops.basis_state(2, 1))
        got = lb.apply_generator(m, rho)
        want = np.diag([1.0, -1.0]).astype(complex)
        assert np.abs(got - want).max() < 1e-14

    def test_pure_dephasing(self):
        kappa = 0.7
        m = lb.LindbladModel(hamiltonian=np.zeros((2, 2)),
                             jumps=(np.sqrt(kappa) * SZ,))
        c = 0.3 - 0.2j
        rho = np.array([[0.6, c], [np.conj(c), 0.4]])
        got = lb.apply_generator(m, rho)
        assert np.isclose(got[0, 1], -2 * kappa * c)
        assert abs(got[0, 0]) < 1e-14 and abs(got[1, 1]) < 1e-14

    def test_traceless_hermitian(self):
        m = lb.random_lindblad_model(4, 2, RNG)
        out = lb.apply_generator(m, ops.random_density(4, RNG))
        assert abs(np.trace(out)) <= 1e-10
        assert ops.hermiticity_defect(out) <= 1e-10


class TestSuperoperator:
    def test_matches_generator(self):
        for dim in (2, 3, 4, 6):
            m = lb.random_lindblad_model(dim, 2, RNG)
            s = lb.build_superoperator(m)
            for _ in range(5):
                rho = ops.random_density(dim, RNG)
                direct = lb.apply_generator(m, rho)
                assert np.abs(s(rho) - direct).max() <= 1e-10

    def test_hamiltonian_only_form(self):
        h = SZ.copy()
        m = lb.LindbladModel(hamiltonian=h)
        s = lb.build_superoperator(m).matrix
        eye = np.eye(2)
        want = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        assert np.allclose(s, want)

    def test_amplitude_damping_spectrum(self):
        gamma, omega0 = 0.8, 1.3
        spec = np.sort_complex(lb.liouvillian_spectrum(amplitude_damping(gamma, omega0)))
        want = np.sort_complex(np.array(
            [0.0, -gamma, -gamma / 2 + 1j * omega0, -gamma / 2 - 1j * omega0]))
        assert np.abs(spec - want).max() < 1e-12

    def test_trace_preservation_random(self):
        for _ in range(20):
            dim = int(RNG.integers(2, 5))
            m = lb.random_lindblad_model(dim, 2, RNG)
            s = lb.build_superoperator(m).matrix
            left = lb.vec(np.eye(dim)).conj() @ s
            assert np.abs(left).max() <= 1e-10

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            lb.build_superoperator(
                lb.LindbladModel(hamiltonian=np.zeros((70, 70))))


class TestPropagate:
    def test_time_zero(self):
        m = amplitude_damping()
        rho0 = ops.random_density(2, RNG)
        assert np.abs(lb.propagate(m, rho0, 0.0) - rho0).max() < 1e-12

    def test_analytic_decay(self):
        m = amplitude_damping(gamma=1.0)
        rho = lb.propagate(m, ops.projector(ops.basis_state(2, 1)), 1.0)
        assert abs(rho[1, 1].real - np.exp(-1.0)) <= 1e-8
        assert abs(np.trace(rho).real - 1.0) <= 1e-9

    def test_unitary_isospectral(self):
        m = lb.LindbladModel(hamiltonian=ops.random_hermitian(3, RNG))
        rho0 = ops.random_density(3, RNG)
        w0 = np.sort(np.linalg.eigvalsh(rho0))
        for t in (0.5, 2.0):
            wt = np.sort(np.linalg.eigvalsh(lb.propagate(m, rho0, t)))
            assert np.abs(wt - w0).max() < 1e-10

    def test_methods_agree(self):
        for dim in (2, 4, 8):
            m = lb.random_lindblad_model(dim, 2, RNG)
            rho0 = ops.random_density(dim, RNG)
            exact = lb.propagate(m, rho0, 0.8, method="exact_exp")
            rk = lb.propagate(m, rho0, 0.8, method="adaptive_rk")
            assert np.abs(exact - rk).max() <= 1e-7

    def test_semigroup_property(self):
        m = lb.random_lindblad_model(3, 2, RNG)
        rho0 = ops.random_density(3, RNG)
        once = lb.propagate(m, rho0, 1.1)
        twice = lb.propagate(m, lb.propagate(m, rho0, 0.6), 0.5)
        assert np.abs(once - twice).max() <= 1e-9

    def test_series_uniform_grid(self):
        m = amplitude_damping()
        times = np.linspace(0, 2, 9)
        rho0 = ops.projector(ops.basis_state(2, 1))
        series = lb.propagate_series(m, rho0, times)
        for t, r in zip(times, series):
            assert abs(r[1, 1].real - np.exp(-t)) < 1e-9


class TestSteadyState:
    def test_amplitude_damping(self):
        res = lb.steady_state(amplitude_damping(gamma=0.8))
        assert res.unique
        assert np.abs(res.rho - np.diag([1.0, 0.0])).max() < 1e-10
        assert np.isclose(res.gap, 0.4, atol=1e-10)

    def test_thermal_balance(self):
        gd, gu = 1.0, 0.4
        res = lb.steady_state(thermal_qubit(gd, gu))
        assert np.isclose(res.rho[0, 0].real, gd / (gd + gu), atol=1e-9)
        assert np.isclose(res.rho[1, 1].real, gu / (gd + gu), atol=1e-9)

    def test_unitary_degenerate(self):
        m = lb.LindbladModel(hamiltonian=np.diag([0.0, 1.0, 2.5]).astype(complex))
        res = lb.steady_state(m)
        assert not res.unique
        assert res.null_dim >= 3

    def test_large_dim_path(self):
        # 5 spins -> superoperator 1024x1024, inverse-iteration branch
        n = 5
        h = sum(ops.site_operator(ops.SIGMA_Z, j, n) for j in range(1, n + 1))
        jumps = tuple(0.6 * ops.site_operator(ops.SIGMA_MINUS, j, n)
                      for j in range(1, n + 1))
        m = lb.LindbladModel(hamiltonian=h.astype(complex), jumps=jumps)
        res = lb.steady_state(m)
        assert res.unique
        assert res.residual <= 1e-8
        # all-down state is the unique dark state
        want = np.zeros((2 ** n, 2 ** n))
        want[0, 0] = 1.0
        assert np.abs(res.rho - want).max() < 1e-7

    def test_relaxation_to_steady(self):
        m = lb.random_lindblad_model(3, 2, RNG, require_irreducible=True)
        res = lb.steady_state(m)
        t_long = 40.0 / res.gap
        a = lb.propagate(m, ops.random_density(3, RNG), t_long)
        b = lb.propagate(m, ops.random_density(3, RNG), t_long)
        assert ops.trace_distance(a, b) < 1e-6
        assert ops.trace_distance(a, res.rho) < 1e-6


class TestCommutant:
    def test_amplitude_damping_irreducible(self):
        res = lb.commutant_uniqueness_test(amplitude_damping())
        assert res.irreducible and res.commutant_dim == 1

    def test_identity_jump_reducible(self):
        m = lb.LindbladModel(hamiltonian=np.zeros((2, 2)), jumps=(np.eye(2),))
        res = lb.commutant_uniqueness_test(m)
        assert not res.irreducible
        assert res.witness is not None
        # witness commutes with every generator and is not scalar
        for g in (m.hamiltonian,) + m.jumps:
            assert np.abs(g @ res.witness - res.witness @ g).max() < 1e-9
        assert np.abs(res.witness - np.trace(res.witness) / 2 * np.eye(2)).max() > 0.1

    def test_half_damped_pair_reducible(self):
        # damping on qubit 1 only leaves qubit 2 untouched
        m = lb.LindbladModel(hamiltonian=np.zeros((4, 4)),
                             jumps=(ops.tensor(SM, np.eye(2)),))
        res = lb.commutant_uniqueness_test(m)
        assert not res.irreducible
        w = res.witness
        for g in m.jumps + tuple(j.conj().T for j in m.jumps):
            assert np.abs(g @ w - w @ g).max() < 1e-8

    def test_fully_damped_pair_irreducible(self):
        m = lb.LindbladModel(
            hamiltonian=np.zeros((4, 4)),
            jumps=(ops.tensor(SM, np.eye(2)), ops.tensor(np.eye(2), SM)))
        assert lb.commutant_uniqueness_test(m).irreducible

    def test_agrees_with_spectrum(self):
        for _ in range(8):
            dim = int(RNG.integers(2, 5))
            m = lb.random_lindblad_model(dim, 1, RNG)
            spec = lb.liouvillian_spectrum(m)
            n_zero = int(np.sum(np.abs(spec) <= 1e-9))
            assert lb.commutant_uniqueness_test(m).irreducible == (n_zero == 1)


class TestKraus:
    def test_unitary_channel(self):
        u = ops.matrix_exp(-1j * ops.random_hermitian(3, RNG))
        k = lb.KrausMap(generators=(u,))
        rho = ops.random_density(3, RNG)
        assert np.abs(lb.apply_kraus(k, rho) - u @ rho @ u.conj().T).max() < 1e-12

    def test_amplitude_damping_pair(self):
        p = 0.25
        k0 = np.diag([1.0, np.sqrt(1 - p)]).astype(complex)
        k1 = np.sqrt(p) * SM
        k = lb.KrausMap(generators=(k0, k1))
        rho = lb.apply_kraus(k, ops.projector(ops.basis_state(2, 1)))
        assert np.abs(rho - np.diag([0.25, 0.75])).max() < 1e-12

    def test_dual_preserves_identity(self):
        p = 0.3
        k = lb.KrausMap(generators=(np.diag([1, np.sqrt(1 - p)]).astype(complex),
                                    np.sqrt(p) * SM))
        assert np.abs(lb.dual_kraus(k, np.eye(2)) - np.eye(2)).max() < 1e-12

    def test_completeness_enforced(self):
        k = lb.KrausMap(generators=(0.9 * np.eye(2),))
        with pytest.raises(KrausError):
            lb.apply_kraus(k, ops.random_density(2, RNG))

    def test_first_order_convergence(self):
        m = lb.random_lindblad_model(2, 1, RNG)
        rho0 = ops.random_density(2, RNG)
        t = 0.5
        want = lb.propagate(m, rho0, t)

        def iterate(dt):
            k = lb.first_order_kraus(m, dt)
            rho = rho0.copy()
            for _ in range(int(round(t / dt))):
                rho = lb.apply_kraus(k, rho, completeness_tol=1.0)
                rho = rho / np.trace(rho).real
            return np.abs(rho - want).max()

        errs = np.array([iterate(dt) for dt in (0.01, 0.005, 0.0025)])
        ratios = errs[:-1] / errs[1:]
        assert np.all(ratios > 1.5) and np.all(ratios < 2.7)  # O(dt)


class TestDualGenerator:
    def test_identity_annihilated(self):
        m = lb.random_lindblad_model(3, 2, RNG)
        assert np.abs(lb.dual_generator(m, np.eye(3))).max() <= 1e-12

    def test_duality_relation(self):
        m = lb.random_lindblad_model(4, 2, RNG)
        for _ in range(5):
            x = ops.random_hermitian(4, RNG)
            rho = ops.random_density(4, RNG)
            lhs = np.trace(x.conj().T @ lb.apply_generator(m, rho))
            rhs = np.trace(lb.dual_generator(m, x).conj().T @ rho)
            assert abs(lhs - rhs) <= 1e-10

    def test_closed_system_heisenberg(self):
        h = ops.random_hermitian(3, RNG)
        m = lb.LindbladModel(hamiltonian=h)
        x = ops.random_hermitian(3, RNG)
        assert np.abs(lb.dual_generator(m, x) - 1j * (h @ x - x @ h)).max() < 1e-12


class TestGauge:
    def test_identity_gauge(self):
        m = amplitude_damping()
        g = lb.gauge_transform(m, [0.0], 0.0)
        assert np.abs(g.hamiltonian - m.hamiltonian).max() < 1e-14
        assert np.abs(g.jumps[0] - m.jumps[0]).max() < 1e-14

    def test_superoperator_invariance(self):
        m = amplitude_damping(gamma=1.0)
        g = lb.gauge_transform(m, [0.3 + 0.1j], 0.7)
        d = np.abs(lb.build_superoperator(m).matrix
                   - lb.build_superoperator(g).matrix).max()
        assert d <= 1e-12

    def test_hermitian_jump_real_shift(self):
        m = lb.LindbladModel(hamiltonian=SZ.copy(), jumps=(ops.SIGMA_X,))
        g = lb.gauge_transform(m, [0.4], 0.9)
        assert np.abs(g.hamiltonian - (m.hamiltonian + 0.9 * np.eye(2))).max() < 1e-12

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            lb.gauge_transform(amplitude_damping(), [0.1, 0.2], 0.0)


class TestEffectiveHamiltonian:
    def test_closed_limit(self):
        h = ops.random_hermitian(3, RNG)
        m = lb.LindbladModel(hamiltonian=h)
        assert np.allclose(lb.effective_hamiltonian(m), h)

    def test_amplitude_damping_eigenvalues(self):
        gamma, omega0 = 0.8, 1.0
        heff = lb.effective_hamiltonian(amplitude_damping(gamma, omega0))
        w = np.sort_complex(np.linalg.eigvals(heff))
        want = np.sort_complex(np.array([omega0 / 2, -omega0 / 2 - 1j * gamma / 2]))
        assert np.abs(w - want).max() < 1e-12

    def test_decay_rates_nonnegative(self):
        for _ in range(20):
            m = lb.random_lindblad_model(int(RNG.integers(2, 5)), 2, RNG)
            w = np.linalg.eigvals(lb.effective_hamiltonian(m))
            assert np.all(w.imag <= 1e-10)


class TestTrajectories:
    def test_closed_system_deterministic(self):
        m = lb.LindbladModel(hamiltonian=0.5 * SZ)
        psi0 = np.array([1.0, 1.0]) / np.sqrt(2)
        res = lb.run_trajectories(m, psi0, 1.0, 1e-2, 10, seed=1)
        u = ops.matrix_exp(-1j * m.hamiltonian, 1.0)
        want = ops.projector(u @ psi0)
        assert np.abs(res.mean_state - want).max() < 1e-9
        assert res.jump_counts.size == 0 or res.jump_counts.sum() == 0

    def test_amplitude_damping_statistics(self):
        m = amplitude_damping(gamma=1.0)
        res = lb.run_trajectories(m, ops.basis_state(2, 1), 1.0, 1e-3, 3000,
                                  seed=7)
        p1 = np.abs(res.final_states[:, 1]) ** 2
        sem = p1.std(ddof=1) / np.sqrt(p1.size)
        assert abs(p1.mean() - np.exp(-1.0)) <= 3 * sem + 5e-3

    def test_seed_reproducibility(self):
        m = amplitude_damping()
        a = lb.run_trajectories(m, ops.basis_state(2, 1), 0.5, 1e-2, 64, seed=3)
        b = lb.run_trajectories(m, ops.basis_state(2, 1), 0.5, 1e-2, 64, seed=3,
                                chunk=17)
        assert np.array_equal(a.final_states, b.final_states)
        assert np.array_equal(a.jump_counts, b.jump_counts)
        assert np.abs(a.mean_state - b.mean_state).max() == 0.0

    def test_step_size_guard(self):
        m = amplitude_damping(gamma=100.0)
        with pytest.raises(ValueError):
            lb.run_trajectories(m, ops.basis_state(2, 1), 1.0, 1e-2, 4, seed=0)

    def test_mean_matches_master_equation(self):
        m = thermal_qubit(1.0, 0.3)
        t, dt = 0.8, 1e-3
        res = lb.run_trajectories(m, ops.basis_state(2, 1), t, dt, 4000, seed=11)
        want = lb.propagate(m, ops.projector(ops.basis_state(2, 1)), t)
        p1 = np.abs(res.final_states[:, 1]) ** 2
        sem = p1.std(ddof=1) / np.sqrt(p1.size)
        err = ops.trace_distance(res.mean_state, want)
        assert err <= max(3 * sem, 5 * dt)
