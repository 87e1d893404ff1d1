"""Collision engine: stroboscopic map, Kraus extraction, continuum limit."""

import numpy as np
import pytest

from oqsim import collisions as cl
from oqsim import lindblad as lb
from oqsim import operators as ops
from oqsim.errors import DimensionError

RNG = np.random.default_rng(404)


def random_spec(ds, da, tau=0.3, rng=RNG):
    return cl.CollisionSpec(
        system_hamiltonian=ops.random_hermitian(ds, rng),
        ancilla_hamiltonian=ops.random_hermitian(da, rng),
        interaction=ops.random_hermitian(ds * da, rng),
        ancilla_state=ops.random_density(da, rng),
        tau=tau)


def partial_swap_spec(g, tau):
    v = g * (ops.tensor(ops.SIGMA_X, ops.SIGMA_X)
             + ops.tensor(ops.SIGMA_Y, ops.SIGMA_Y)) / 2
    return cl.CollisionSpec(
        system_hamiltonian=np.zeros((2, 2)),
        ancilla_hamiltonian=np.zeros((2, 2)),
        interaction=v,
        ancilla_state=ops.projector(ops.basis_state(2, 0)),
        tau=tau)


class TestCollisionMap:
    def test_decoupled_ancilla_is_unitary(self):
        hs = ops.random_hermitian(3, RNG)
        spec = cl.CollisionSpec(
            system_hamiltonian=hs,
            ancilla_hamiltonian=ops.random_hermitian(2, RNG),
            interaction=np.zeros((6, 6)),
            ancilla_state=ops.random_density(2, RNG),
            tau=0.7)
        rho = ops.random_density(3, RNG)
        u = ops.matrix_exp(-1j * hs, 0.7)
        assert np.abs(cl.collision_map(spec, rho) - u @ rho @ u.conj().T).max() < 1e-12

    def test_full_swap(self):
        g = 1.0
        spec = partial_swap_spec(g, tau=np.pi / 2 / g)
        rho = ops.random_density(2, RNG)
        out = cl.collision_map(spec, rho)
        assert np.abs(out - ops.projector(ops.basis_state(2, 0))).max() < 1e-12

    def test_zero_tau_identity(self):
        spec = partial_swap_spec(0.8, tau=0.0)
        rho = ops.random_density(2, RNG)
        assert np.abs(cl.collision_map(spec, rho) - rho).max() < 1e-14

    def test_trace_and_positivity(self):
        spec = random_spec(3, 2)
        rho = cl.collision_map(spec, ops.random_density(3, RNG))
        assert abs(np.trace(rho).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(ops.hermitian_part(rho)).min() > -1e-12

    def test_contraction_in_trace_distance(self):
        spec = random_spec(2, 3)
        for _ in range(5):
            a, b = ops.random_density(2, RNG), ops.random_density(2, RNG)
            d_out = ops.trace_distance(cl.collision_map(spec, a),
                                       cl.collision_map(spec, b))
            assert d_out <= ops.trace_distance(a, b) + 1e-10


class TestKrausExtraction:
    def test_matches_collision_map(self):
        for ds, da in ((2, 2), (2, 3), (3, 2), (4, 4)):
            spec = random_spec(ds, da)
            ck = cl.extract_kraus(spec)
            assert lb.kraus_completeness_defect(ck.kraus) <= 1e-10
            for _ in range(3):
                rho = ops.random_density(ds, RNG)
                direct = cl.collision_map(spec, rho)
                via = lb.apply_kraus(ck.kraus, rho, completeness_tol=1e-10)
                assert np.abs(direct - via).max() <= 1e-10

    def test_pure_ancilla_no_interaction(self):
        hs = ops.random_hermitian(2, RNG)
        spec = cl.CollisionSpec(
            system_hamiltonian=hs,
            ancilla_hamiltonian=np.diag([0.0, 1.3]).astype(complex),
            interaction=np.zeros((4, 4)),
            ancilla_state=ops.projector(ops.basis_state(2, 0)),
            tau=0.5)
        ck = cl.extract_kraus(spec)
        u = ops.matrix_exp(-1j * hs, 0.5)
        nonzero = [g for g in ck.kraus.generators if np.abs(g).max() > 1e-12]
        assert len(nonzero) == 1
        # single generator equals the system unitary up to a phase
        ratio = nonzero[0] @ np.linalg.inv(u)
        phase = ratio[0, 0]
        assert np.isclose(abs(phase), 1.0, atol=1e-10)
        assert np.abs(ratio - phase * np.eye(2)).max() < 1e-10

    def test_maximally_mixed_weights(self):
        spec = cl.CollisionSpec(
            system_hamiltonian=np.zeros((2, 2)),
            ancilla_hamiltonian=np.zeros((2, 2)),
            interaction=ops.random_hermitian(4, RNG),
            ancilla_state=np.eye(2, dtype=complex) / 2,
            tau=0.4)
        ck = cl.extract_kraus(spec)
        assert len(ck.kraus.generators) == 4
        assert np.allclose(ck.weights, 0.5)


class TestStroboscopic:
    def test_zero_collisions(self):
        spec = random_spec(2, 2)
        rho0 = ops.random_density(2, RNG)
        assert np.abs(cl.stroboscopic_evolve(spec, rho0, 0) - rho0).max() < 1e-15

    def test_full_swap_loads_ancilla(self):
        spec = partial_swap_spec(1.0, np.pi / 2)
        rho0 = ops.random_density(2, RNG)
        out = cl.stroboscopic_evolve(spec, rho0, 1)
        assert np.abs(out - spec.ancilla_state).max() < 1e-12

    def test_partial_swap_monotone_cooling(self):
        # excited population contracts by cos^2(g tau) per collision
        spec = partial_swap_spec(1.0, 0.3)
        rho = ops.projector(ops.basis_state(2, 1))
        prev = 1.0
        for _ in range(40):
            rho = cl.collision_map(spec, rho)
            p1 = float(rho[1, 1].real)
            assert p1 <= prev + 1e-12
            prev = p1
        assert prev < 0.05

    def test_markov_composition(self):
        spec = random_spec(2, 2)
        rho0 = ops.random_density(2, RNG)
        assert np.allclose(cl.stroboscopic_evolve(spec, rho0, 5),
                           cl.stroboscopic_evolve(
                               spec, cl.stroboscopic_evolve(spec, rho0, 2), 3))

    def test_per_collision_ancilla_override(self):
        spec = partial_swap_spec(1.0, np.pi / 2)
        etas = [ops.projector(ops.basis_state(2, 1)),
                ops.projector(ops.basis_state(2, 0))]
        out = cl.stroboscopic_evolve(spec, ops.random_density(2, RNG), 2,
                                     ancilla_states=etas)
        # last full swap loads the final ancilla state
        assert np.abs(out - etas[-1]).max() < 1e-12
        with pytest.raises(DimensionError):
            cl.stroboscopic_evolve(spec, ops.random_density(2, RNG), 3,
                                   ancilla_states=etas)


class TestContinuumLimit:
    def test_first_order_generator_match(self):
        g, tau0, na = 0.8, 1.0, 0.3
        ref = cl.exchange_lindblad_reference(g, tau0, na, omega0=0.7)
        rho = ops.random_density(2, RNG)
        want = lb.apply_generator(ref, rho)
        errs = []
        for tau in (1e-3, 5e-4):
            spec = cl.exchange_collision_spec(g, tau0, na, omega0=0.7).rescaled(tau)
            drho = (cl.collision_map(spec, rho) - rho) / tau
            errs.append(np.abs(drho - want).max())
        assert errs[1] < errs[0]
        assert errs[1] < 5e-3

    def test_convergence_order_one(self):
        g, tau0 = 0.9, 1.0
        base = cl.exchange_collision_spec(g, tau0, n_ancilla=0.0, omega0=1.0)
        ref = cl.exchange_lindblad_reference(g, tau0, n_ancilla=0.0, omega0=1.0)
        taus = np.array([0.2, 0.1, 0.05, 0.025])
        rho0 = ops.projector(ops.basis_state(2, 1))
        report = cl.continuum_limit_check(base, ref, taus, 1.0, rho0)
        assert abs(report.fitted_order - 1.0) <= 0.3
        assert np.all(np.diff(report.distances) < 0)

    def test_zero_interaction_matches_unitary(self):
        hs = ops.random_hermitian(2, RNG)
        base = cl.CollisionSpec(
            system_hamiltonian=hs, ancilla_hamiltonian=np.zeros((2, 2)),
            interaction=np.zeros((4, 4)),
            ancilla_state=np.eye(2, dtype=complex) / 2, tau=0.5)
        ref = lb.LindbladModel(hamiltonian=hs)
        report = cl.continuum_limit_check(base, ref, [0.5, 0.25, 0.125], 1.0,
                                          ops.random_density(2, RNG))
        assert np.all(report.distances <= 1e-12)

    def test_unscaled_interaction_decouples(self):
        g, tau0 = 0.9, 1.0
        base = cl.exchange_collision_spec(g, tau0, n_ancilla=0.0, omega0=1.0)
        unitary = lb.LindbladModel(
            hamiltonian=cl.exchange_lindblad_reference(g, tau0).hamiltonian)
        report = cl.continuum_limit_check(base, unitary,
                                          [0.2, 0.1, 0.05, 0.025], 1.0,
                                          ops.projector(ops.basis_state(2, 1)),
                                          scale_interaction=False)
        assert np.all(np.diff(report.distances) < 0)
        assert report.distances[-1] < 0.5 * report.distances[0]

    def test_divisibility_enforced(self):
        base = cl.exchange_collision_spec(0.5, 1.0)
        ref = cl.exchange_lindblad_reference(0.5, 1.0)
        with pytest.raises(ValueError):
            cl.continuum_limit_check(base, ref, [0.3], 1.0,
                                     ops.random_density(2, RNG))
