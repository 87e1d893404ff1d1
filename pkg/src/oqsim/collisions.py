"""Repeated-interaction (collision) dynamics.

A system repeatedly meets fresh ancillae, each prepared in the same state
and interacting for a duration tau through a joint unitary. The induced
stroboscopic map is completely positive and trace preserving; with the
interaction strength scaled as 1/sqrt(tau) it converges to a Lindblad
semigroup as tau -> 0, and this module ships a harness that measures the
convergence rate against a reference generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .errors import DimensionError
from .lindblad import KrausMap, LindbladModel, apply_kraus, propagate


@dataclass(frozen=True)
class CollisionSpec:
    """System-ancilla collision data: Hamiltonians, coupling, ancilla state.

    ``interaction`` lives on the joint space (system factor first). A zero
    collision time is allowed and produces the identity map.
    """

    system_hamiltonian: np.ndarray
    ancilla_hamiltonian: np.ndarray
    interaction: np.ndarray
    ancilla_state: np.ndarray
    tau: float

    def __post_init__(self):
        hs = ops.hermitize(self.system_hamiltonian)
        ha = ops.hermitize(self.ancilla_hamiltonian)
        v = ops.hermitize(self.interaction)
        eta = ops.check_density(self.ancilla_state)
        if v.shape[0] != hs.shape[0] * ha.shape[0]:
            raise DimensionError(
                f"interaction dim {v.shape[0]} != system {hs.shape[0]} "
                f"x ancilla {ha.shape[0]}")
        if eta.shape != ha.shape:
            raise DimensionError("ancilla state and Hamiltonian dims differ")
        if self.tau < 0:
            raise ValueError("collision time must be nonnegative")
        for a in (hs, ha, v, eta):
            a.setflags(write=False)
        object.__setattr__(self, "system_hamiltonian", hs)
        object.__setattr__(self, "ancilla_hamiltonian", ha)
        object.__setattr__(self, "interaction", v)
        object.__setattr__(self, "ancilla_state", eta)

    @property
    def system_dim(self) -> int:
        return self.system_hamiltonian.shape[0]

    @property
    def ancilla_dim(self) -> int:
        return self.ancilla_hamiltonian.shape[0]

    def joint_hamiltonian(self) -> np.ndarray:
        return (ops.tensor(self.system_hamiltonian, np.eye(self.ancilla_dim))
                + ops.tensor(np.eye(self.system_dim), self.ancilla_hamiltonian)
                + self.interaction)

    def unitary(self) -> np.ndarray:
        return ops.matrix_exp(-1j * self.joint_hamiltonian(), self.tau)

    def rescaled(self, tau: float) -> "CollisionSpec":
        """Same collision with duration tau and V scaled by sqrt(tau_ref/tau)."""
        return CollisionSpec(
            system_hamiltonian=self.system_hamiltonian,
            ancilla_hamiltonian=self.ancilla_hamiltonian,
            interaction=self.interaction * np.sqrt(self.tau / tau),
            ancilla_state=self.ancilla_state,
            tau=tau)


def collision_map(spec: CollisionSpec, rho) -> np.ndarray:
    """One collision: tr_ancilla { K (rho x eta) K^dag }."""
    r = ops.as_square(rho)
    if r.shape[0] != spec.system_dim:
        raise DimensionError(f"state dim {r.shape[0]} != system {spec.system_dim}")
    k = spec.unitary()
    joint = k @ ops.tensor(r, spec.ancilla_state) @ k.conj().T
    return ops.partial_trace(joint, (spec.system_dim, spec.ancilla_dim), keep="A")


@dataclass(frozen=True)
class CollisionKraus:
    """Kraus family of one collision: sqrt(pi_q) <phi_p| K |phi_q>.

    ``index_pairs[m] = (p, q)`` records which ancilla matrix element
    produced generator m. Ancilla eigenvalues below 1e-12 are dropped
    from the q sum.
    """

    kraus: KrausMap
    index_pairs: tuple
    weights: np.ndarray


def extract_kraus(spec: CollisionSpec) -> CollisionKraus:
    """Resolve the collision map into explicit Kraus generators."""
    pi, phi = np.linalg.eigh(spec.ancilla_state)
    k = spec.unitary()
    ds, da = spec.system_dim, spec.ancilla_dim
    kt = k.reshape(ds, da, ds, da)
    gens, pairs, weights = [], [], []
    for q in range(da):
        if pi[q] <= 1e-12:
            continue
        for p in range(da):
            # <phi_p| K |phi_q> contracted over the ancilla factor
            w = np.einsum("a,satb,b->st", phi[:, p].conj(), kt, phi[:, q])
            gens.append(np.sqrt(pi[q]) * w)
            pairs.append((p, q))
            weights.append(pi[q])
    return CollisionKraus(kraus=KrausMap(generators=tuple(gens)),
                          index_pairs=tuple(pairs),
                          weights=np.asarray(weights))


def stroboscopic_evolve(spec: CollisionSpec, rho0, n: int,
                        ancilla_states=None) -> np.ndarray:
    """State after n collisions; ``ancilla_states`` overrides eta per collision."""
    if n < 0:
        raise ValueError("collision count must be nonnegative")
    rho = ops.check_density(rho0)
    if ancilla_states is not None and len(ancilla_states) != n:
        raise DimensionError(f"{len(ancilla_states)} ancilla states for {n} collisions")
    for step in range(n):
        s = spec
        if ancilla_states is not None:
            s = CollisionSpec(
                system_hamiltonian=spec.system_hamiltonian,
                ancilla_hamiltonian=spec.ancilla_hamiltonian,
                interaction=spec.interaction,
                ancilla_state=ancilla_states[step],
                tau=spec.tau)
        rho = collision_map(s, rho)
    return rho


def exchange_collision_spec(g: float, tau: float, n_ancilla: float = 0.0,
                            omega0: float = 0.0) -> CollisionSpec:
    """Qubit-qubit excitation-exchange collision.

    V = g (sigma^+ x sigma^- + sigma^- x sigma^+) with both qubits at
    splitting omega0 (resonant) and the ancilla thermally populated at
    n_ancilla.
    """
    hs = 0.5 * omega0 * ops.SIGMA_Z
    v = g * (ops.tensor(ops.SIGMA_PLUS, ops.SIGMA_MINUS)
             + ops.tensor(ops.SIGMA_MINUS, ops.SIGMA_PLUS))
    eta = np.diag([1.0 - n_ancilla, n_ancilla]).astype(complex)
    return CollisionSpec(system_hamiltonian=hs, ancilla_hamiltonian=hs.copy(),
                         interaction=v, ancilla_state=eta, tau=tau)


def exchange_lindblad_reference(g: float, tau_ref: float,
                                n_ancilla: float = 0.0,
                                omega0: float = 0.0) -> LindbladModel:
    """Continuum limit of the exchange collision: rates g^2 tau_ref x populations."""
    gamma = g * g * tau_ref
    jumps = []
    if 1.0 - n_ancilla > 0:
        jumps.append(np.sqrt(gamma * (1.0 - n_ancilla)) * np.asarray(ops.SIGMA_MINUS))
    if n_ancilla > 0:
        jumps.append(np.sqrt(gamma * n_ancilla) * np.asarray(ops.SIGMA_PLUS))
    return LindbladModel(hamiltonian=0.5 * omega0 * ops.SIGMA_Z,
                         jumps=tuple(jumps))


@dataclass(frozen=True)
class ConvergenceReport:
    """Collision-vs-Lindblad distances per tau and the fitted order."""

    taus: np.ndarray
    distances: np.ndarray
    fitted_order: float


def continuum_limit_check(base: CollisionSpec, lindblad_ref: LindbladModel,
                          taus, t_final: float, rho0,
                          scale_interaction: bool = True) -> ConvergenceReport:
    """Measure how fast the stroboscopic map approaches the reference.

    For each tau the interaction is rescaled by sqrt(tau_ref/tau) (unless
    ``scale_interaction`` is off, the decoupling control), the collision
    chain is run to t_final, and the trace distance to the propagated
    reference is recorded. The fitted order is the log-log slope.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus <= 0):
        raise ValueError("collision times must be positive")
    rho0 = ops.check_density(rho0)
    ref = propagate(lindblad_ref, rho0, t_final)
    dists = []
    for tau in taus:
        n = t_final / tau
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"t_final = {t_final} is not a multiple of tau = {tau}")
        spec = base.rescaled(float(tau)) if scale_interaction else CollisionSpec(
            system_hamiltonian=base.system_hamiltonian,
            ancilla_hamiltonian=base.ancilla_hamiltonian,
            interaction=base.interaction,
            ancilla_state=base.ancilla_state,
            tau=float(tau))
        rho = stroboscopic_evolve(spec, rho0, int(round(n)))
        dists.append(ops.trace_distance(rho, ref))
    dists = np.asarray(dists)
    if np.all(dists > 0) and taus.size >= 2:
        order = float(np.polyfit(np.log(taus), np.log(dists), 1)[0])
    else:
        order = float("nan")
    return ConvergenceReport(taus=taus, distances=dists, fitted_order=order)
