"""Free-fermion Gaussian dynamics via the correlation-matrix reduction.

For quadratic, number-conserving open dynamics the two-point matrix
C[i, j] = <c_j^dag c_i> closes on itself and obeys

    dC/dt = P C + C P^dag + F,

with P = -i T - (g Theta)(g Theta)^dag / 2 built from the single-particle
Hamiltonian T and the system-bath incidence Theta, and the drive
F = (g Theta) C_A (g Theta)^dag set by the bath correlation matrix C_A.
This module evolves C, solves the stationary equation with a uniqueness
certificate, measures bond currents in boundary-driven chains, and runs
the entanglement-replication experiment with Bell-pair drive fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import operators as ops
from .errors import ConvergenceError, DimensionError, PositivityError
from .lindblad import LindbladModel

OCCUPATION_TOL = 1e-10


@dataclass(frozen=True)
class LyapunovModel:
    """Single-particle data (T, Theta, g, C_A) of a driven Gaussian system."""

    single_particle: np.ndarray      # T, L_S x L_S Hermitian
    incidence: np.ndarray            # Theta, L_S x L_A
    coupling: float                  # g
    bath_correlations: np.ndarray    # C_A, L_A x L_A

    def __post_init__(self):
        t = ops.hermitize(self.single_particle)
        theta = np.asarray(self.incidence, dtype=complex)
        if theta.ndim != 2 or theta.shape[0] != t.shape[0]:
            raise DimensionError(
                f"incidence shape {theta.shape} incompatible with {t.shape}")
        ca = ops.hermitize(self.bath_correlations)
        if ca.shape[0] != theta.shape[1]:
            raise DimensionError("bath correlation matrix does not match incidence")
        w = np.linalg.eigvalsh(ca)
        if w.min() < -OCCUPATION_TOL or w.max() > 1 + OCCUPATION_TOL:
            raise PositivityError(
                f"bath occupations outside [0, 1]: [{w.min():.3e}, {w.max():.3e}]")
        for a in (t, theta, ca):
            a.setflags(write=False)
        object.__setattr__(self, "single_particle", t)
        object.__setattr__(self, "incidence", theta)
        object.__setattr__(self, "bath_correlations", ca)

    @property
    def n_modes(self) -> int:
        return self.single_particle.shape[0]

    @property
    def drift(self) -> np.ndarray:
        """P = -i T - (g Theta)(g Theta)^dag / 2."""
        gt = self.coupling * self.incidence
        return -1j * self.single_particle - 0.5 * (gt @ gt.conj().T)

    @property
    def drive(self) -> np.ndarray:
        """F = (g Theta) C_A (g Theta)^dag, positive semi-definite."""
        gt = self.coupling * self.incidence
        return gt @ self.bath_correlations @ gt.conj().T


def check_correlation(c) -> np.ndarray:
    """Validate fermionic occupation bounds 0 <= spec(C) <= 1."""
    cm = ops.hermitize(c)
    w = np.linalg.eigvalsh(cm)
    if w.min() < -OCCUPATION_TOL or w.max() > 1 + OCCUPATION_TOL:
        raise PositivityError(
            f"correlation spectrum outside [0, 1]: [{w.min():.3e}, {w.max():.3e}]")
    return cm


def lyapunov_rhs(model: LyapunovModel, c) -> np.ndarray:
    """Time derivative P C + C P^dag + F (Hermitian for Hermitian C)."""
    cm = ops.as_square(c)
    if cm.shape[0] != model.n_modes:
        raise DimensionError(f"C has dim {cm.shape[0]}, model {model.n_modes}")
    p = model.drift
    return p @ cm + cm @ p.conj().T + model.drive


def evolve_correlations(model: LyapunovModel, c0, t: float) -> np.ndarray:
    """Closed-form C(t) = e^{Pt} C0 e^{P^dag t} + int_0^t e^{Ps} F e^{P^dag s} ds.

    The integral term comes from one block exponential of
    [[P, F], [0, -P^dag]], so no quadrature error enters.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    cm = check_correlation(c0)
    n = model.n_modes
    if t == 0:
        return cm
    p = model.drift
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    block[:n, :n] = p
    block[:n, n:] = model.drive
    block[n:, n:] = -p.conj().T
    e = scipy.linalg.expm(t * block)
    e11 = e[:n, :n]            # e^{Pt}
    e12 = e[:n, n:]            # int_0^t e^{Ps} F e^{-P^dag (t-s)} ds
    out = e11 @ cm @ e11.conj().T + e12 @ e11.conj().T
    return ops.hermitian_part(out)


def lyapunov_steady(model: LyapunovModel,
                    fast: bool = False) -> tuple[np.ndarray, bool]:
    """Stationary solution of P C + C P^dag = -F and a uniqueness flag.

    Uniqueness holds iff P and -P^dag share no eigenvalue (checked to
    1e-9). The solve vectorizes the n^2 unknowns; ``fast=True`` uses the
    Schur-based Lyapunov solver instead, which must agree to 1e-10.
    When the solution is not unique a least-squares representative is
    returned rather than raising.
    """
    p = model.drift
    n = model.n_modes
    mu = np.linalg.eigvals(p)
    sep = np.abs(mu[:, None] + mu.conj()[None, :]).min()
    unique = bool(sep > 1e-9)
    if fast:
        c = scipy.linalg.solve_continuous_lyapunov(p, -model.drive)
        return ops.hermitian_part(c), unique
    a = np.kron(np.eye(n), p) + np.kron(p.conj(), np.eye(n))
    rhs = -model.drive.reshape(-1, order="F")
    if unique:
        c = np.linalg.solve(a, rhs)
    else:
        c = np.linalg.lstsq(a, rhs, rcond=None)[0]
    return ops.hermitian_part(c.reshape((n, n), order="F")), unique


def occupations(c) -> np.ndarray:
    return np.real(np.diag(ops.as_square(c)))


def bond_current(c, hopping: float, k: int) -> float:
    """Particle current on bond (k, k+1), 1-based: j_k = 2 J Im C[k+1, k].

    Positive values mean flow from site k+1 toward site k with this
    orientation; in any steady state the profile is bond independent.
    """
    cm = ops.as_square(c)
    n = cm.shape[0]
    if not 1 <= k < n:
        raise DimensionError(f"bond index {k} outside 1..{n - 1}")
    return 2.0 * hopping * float(np.imag(cm[k, k - 1]))


def current_profile(c, hopping: float) -> np.ndarray:
    n = ops.as_square(c).shape[0]
    return np.array([bond_current(c, hopping, k) for k in range(1, n)])


def tridiagonal_chain(n_sites: int, hopping: float) -> np.ndarray:
    t = np.zeros((n_sites, n_sites), dtype=complex)
    for i in range(n_sites - 1):
        t[i, i + 1] = t[i + 1, i] = hopping
    return t


def boundary_driven_chain(n_sites: int, hopping: float, coupling: float,
                          n_left: float, n_right: float) -> LyapunovModel:
    """Tight-binding chain with one bath mode on each end site."""
    theta = np.zeros((n_sites, 2), dtype=complex)
    theta[0, 0] = 1.0
    theta[-1, 1] = 1.0
    return LyapunovModel(
        single_particle=tridiagonal_chain(n_sites, hopping),
        incidence=theta, coupling=coupling,
        bath_correlations=np.diag([n_left, n_right]).astype(complex))


@dataclass(frozen=True)
class TransportReport:
    """Steady currents across chain lengths and the measured coefficient."""

    lengths: np.ndarray
    currents: np.ndarray
    kappa: float
    relative_spread: float
    profile_flatness: np.ndarray


def ballistic_scaling_experiment(coupling: float, hopping: float,
                                 n_left: float, n_right: float,
                                 lengths) -> TransportReport:
    """Steady current vs chain length; ballistic transport keeps it flat."""
    lengths = np.asarray(sorted(int(x) for x in lengths))
    if lengths.min() < 2:
        raise ValueError("chain lengths must be at least 2")
    currents, flats = [], []
    for n_sites in lengths:
        model = boundary_driven_chain(int(n_sites), hopping, coupling,
                                      n_left, n_right)
        c, _unique = lyapunov_steady(model)
        prof = current_profile(c, hopping)
        currents.append(prof.mean())
        flats.append(prof.max() - prof.min())
    currents = np.asarray(currents)
    bias = n_left - n_right
    kappa = float(currents.mean() / bias) if bias != 0 else 0.0
    denom = max(abs(float(currents.mean())), 1e-300)
    spread = float((currents.max() - currents.min()) / denom) if bias != 0 else 0.0
    return TransportReport(lengths=lengths, currents=currents, kappa=kappa,
                           relative_spread=spread,
                           profile_flatness=np.asarray(flats))


def to_manybody_lindblad(model: LyapunovModel) -> LindbladModel:
    """Jordan-Wigner many-body model equivalent to the Gaussian reduction.

    Requires a diagonal bath correlation matrix and incidence columns that
    each select a single site; bath mode k attached to site s with
    occupation n_k becomes loss sqrt(g^2 (1-n_k)) c_s plus gain
    sqrt(g^2 n_k) c_s^dag.
    """
    ca = model.bath_correlations
    if float(np.abs(ca - np.diag(np.diag(ca))).max()) > 1e-12:
        raise DimensionError("many-body mapping needs a diagonal bath matrix")
    theta = model.incidence
    n = model.n_modes
    cs = ops.jordan_wigner_all(n)
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    t = model.single_particle
    for i in range(n):
        for j in range(n):
            if t[i, j] != 0:
                h += t[i, j] * cs[i].conj().T @ cs[j]
    jumps = []
    g2 = model.coupling ** 2
    for k in range(theta.shape[1]):
        col = theta[:, k]
        sites = np.nonzero(np.abs(col) > 1e-14)[0]
        if sites.size != 1 or abs(col[sites[0]] - 1.0) > 1e-12:
            raise DimensionError("incidence columns must be single-site unit vectors")
        s = int(sites[0])
        na = float(np.real(ca[k, k]))
        if g2 * (1 - na) > 0:
            jumps.append(np.sqrt(g2 * (1 - na)) * cs[s])
        if g2 * na > 0:
            jumps.append(np.sqrt(g2 * na) * cs[s].conj().T)
    return LindbladModel(hamiltonian=h, jumps=tuple(jumps))


def correlation_from_state(rho, n_sites: int) -> np.ndarray:
    """Two-point matrix C[i, j] = tr(c_j^dag c_i rho) of a many-body state."""
    cs = ops.jordan_wigner_all(n_sites)
    c = np.empty((n_sites, n_sites), dtype=complex)
    r = ops.as_square(rho)
    for i in range(n_sites):
        for j in range(n_sites):
            c[i, j] = np.trace(cs[j].conj().T @ cs[i] @ r)
    return c


def bell_pair_correlations(phase: float) -> np.ndarray:
    """Correlation matrix of (|01> + e^{i phase}|10>)/sqrt(2) on two modes."""
    x = 0.5 * np.exp(1j * phase)
    return np.array([[0.5, x], [np.conj(x), 0.5]])


def two_chain_bell_model(n_sites: int, hopping: float, coupling: float,
                         phase: float,
                         entangled: bool = True) -> LyapunovModel:
    """Two identical chains, each driven at site 1 by one half of a Bell pair.

    Modes 0..L-1 are chain one, modes L..2L-1 chain two. With
    ``entangled=False`` the drive is the product state |0>|1> instead
    (the no-replication control).
    """
    t2 = np.zeros((2 * n_sites, 2 * n_sites), dtype=complex)
    t = tridiagonal_chain(n_sites, hopping)
    t2[:n_sites, :n_sites] = t
    t2[n_sites:, n_sites:] = t
    theta = np.zeros((2 * n_sites, 2), dtype=complex)
    theta[0, 0] = 1.0
    theta[n_sites, 1] = 1.0
    ca = bell_pair_correlations(phase) if entangled \
        else np.diag([0.0, 1.0]).astype(complex)
    return LyapunovModel(single_particle=t2, incidence=theta,
                         coupling=coupling, bath_correlations=ca)


def pair_density_matrix(c, mode_a: int, mode_b: int) -> np.ndarray:
    """Two-mode reduced density matrix from number-conserving Wick pairing.

    Basis order |n_a n_b> = |00>, |01>, |10>, |11>. Valid when the state
    is Gaussian with no anomalous <cc> correlations.
    """
    cm = ops.as_square(c)
    na = float(np.real(cm[mode_a, mode_a]))
    nb = float(np.real(cm[mode_b, mode_b]))
    x = cm[mode_a, mode_b]               # <c_b^dag c_a>
    d = na * nb - abs(x) ** 2            # <n_a n_b> by Wick
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0 - na - nb + d
    rho[1, 1] = nb - d
    rho[2, 2] = na - d
    rho[3, 3] = d
    rho[2, 1] = x                        # <10|rho|01> = <c_b^dag c_a>
    rho[1, 2] = np.conj(x)
    return rho


def bell_state_vector(phase: float) -> np.ndarray:
    """(|01> + e^{i phase} |10>)/sqrt(2) in the two-mode basis above."""
    v = np.zeros(4, dtype=complex)
    v[1] = 1.0
    v[2] = np.exp(1j * phase)
    return v / np.sqrt(2)


@dataclass(frozen=True)
class RainbowReport:
    """Per-pair Bell fidelities of the replication experiment."""

    fidelities: np.ndarray
    max_off_pair_correlation: float
    steady_unique: bool
    mode: str
    all_above: bool
    threshold: float


def rainbow_experiment(n_sites: int, hopping: float, coupling: float,
                       bell_phase: float, mode: str = "steady",
                       n_collisions: int = 0, tau: float = 0.1,
                       entangled: bool = True,
                       threshold: float = 0.99) -> RainbowReport:
    """Drive two chains with Bell pairs and score mirror-pair entanglement.

    ``mode="steady"`` solves the stationary Lyapunov equation of the
    continuum limit; ``mode="collisions"`` iterates n discrete collisions
    of duration tau with fresh Bell-pair ancillae at single-particle
    level. Mirror pair i couples site i of chain one with site i of
    chain two (both counted from the driven ends).
    """
    model = two_chain_bell_model(n_sites, hopping, coupling, bell_phase,
                                 entangled=entangled)
    if mode == "steady":
        c, unique = lyapunov_steady(model)
    elif mode == "collisions":
        if n_collisions < 1:
            raise ValueError("collision mode needs n_collisions >= 1")
        zero = np.zeros((2 * n_sites, 2 * n_sites), dtype=complex)
        c_prev = collision_correlation_evolve(model, zero, tau, n_collisions - 1)
        c = collision_correlation_evolve(model, c_prev, tau, 1)
        if float(np.abs(c - c_prev).max()) > 1e-8:
            raise ConvergenceError(
                f"collision chain not stationary after {n_collisions} steps")
        unique = True
    else:
        raise ValueError(f"unknown mode {mode!r}")
    fids = []
    for i in range(n_sites):
        rho2 = pair_density_matrix(c, i, n_sites + i)
        fids.append(ops.state_fidelity(rho2, bell_state_vector(bell_phase)))
    fids = np.asarray(fids)
    cross = c[:n_sites, n_sites:].copy()
    np.fill_diagonal(cross, 0.0)
    return RainbowReport(fidelities=fids,
                         max_off_pair_correlation=float(np.abs(cross).max()),
                         steady_unique=unique, mode=mode,
                         all_above=bool(np.all(fids > threshold)),
                         threshold=threshold)


def collision_correlation_evolve(model: LyapunovModel, c0, tau: float,
                                 n_collisions: int) -> np.ndarray:
    """Discrete repeated interactions at the correlation-matrix level.

    Each collision couples the system to fresh ancilla modes in state
    C_A for a duration tau with the coupling scaled by 1/sqrt(tau), so
    the tau -> 0 limit of this map is exactly the Lyapunov flow of
    ``model``.
    """
    if tau <= 0:
        raise ValueError("collision duration must be positive")
    n, na = model.n_modes, model.bath_correlations.shape[0]
    h = np.zeros((n + na, n + na), dtype=complex)
    h[:n, :n] = model.single_particle
    h[:n, n:] = (model.coupling / np.sqrt(tau)) * model.incidence
    h[n:, :n] = h[:n, n:].conj().T
    u = ops.matrix_exp(-1j * h, tau)
    c = check_correlation(c0)
    for _ in range(n_collisions):
        joint = np.zeros((n + na, n + na), dtype=complex)
        joint[:n, :n] = c
        joint[n:, n:] = model.bath_correlations
        joint = u @ joint @ u.conj().T
        c = joint[:n, :n]
    return ops.hermitian_part(c)
