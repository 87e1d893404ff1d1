"""Lindblad (GKSL) engine on dense matrices.

Covers the diagonal-form generator, its column-stacked superoperator
matrix, propagation (exact exponential or adaptive Runge-Kutta), steady
states with a spectral-gap and uniqueness report, the commutant test for
irreducibility, Kraus maps, the Heisenberg-picture dual, gauge
transformations of the (H, L_j) representation, and Monte-Carlo
wave-function trajectories.

Vectorization convention: column stacking, vec(A rho B) =
(B^T kron A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse.linalg

from . import operators as ops
from .errors import (ConvergenceError, DimensionError, IntegrationError,
                     KrausError, NumericError, SizeLimitError)

#: largest Hilbert-space dimension for which dense superoperators are built
MAX_SUPEROP_DIM = 64

#: Hilbert-space size up to which steady states use the full eigendecomposition
FULL_EIG_DIM = 16


@dataclass(frozen=True)
class LindbladModel:
    """A Hamiltonian plus a list of jump operators.

    The Hamiltonian may already include a Lamb-type shift; jump operators
    need not be Hermitian.
    """

    hamiltonian: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        h = ops.hermitize(self.hamiltonian)
        h.setflags(write=False)
        js = []
        for L in self.jumps:
            a = ops.as_square(L)
            if a.shape != h.shape:
                raise DimensionError(
                    f"jump operator shape {a.shape} != Hamiltonian {h.shape}")
            a.setflags(write=False)
            js.append(a)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(js))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def vec(rho) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex).ravel()
    n = int(round(np.sqrt(a.size)))
    if n * n != a.size:
        raise DimensionError(f"vector of length {a.size} is not a stacked square matrix")
    return a.reshape((n, n), order="F")


def dissipation_rate_operator(m: LindbladModel) -> np.ndarray:
    """Sum_j L_j^dag L_j (the total decay-rate operator)."""
    s = np.zeros((m.dim, m.dim), dtype=complex)
    for L in m.jumps:
        s += L.conj().T @ L
    return s


def apply_generator(m: LindbladModel, rho) -> np.ndarray:
    """Action of the generator: -i[H, rho] + sum_j D[L_j](rho)."""
    r = ops.as_square(rho)
    if r.shape != m.hamiltonian.shape:
        raise DimensionError(f"state shape {r.shape} != model dim {m.dim}")
    h = m.hamiltonian
    out = -1j * (h @ r - r @ h)
    for L in m.jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ r @ Ld - 0.5 * (LdL @ r + r @ LdL)
    return out


def dual_generator(m: LindbladModel, x) -> np.ndarray:
    """Heisenberg-picture adjoint: +i[H, X] + sum_j (L^dag X L - {L^dag L, X}/2).

    Satisfies tr(X^dag L(rho)) = tr((L*(X))^dag rho) and annihilates the
    identity.
    """
    a = ops.as_square(x)
    if a.shape != m.hamiltonian.shape:
        raise DimensionError(f"observable shape {a.shape} != model dim {m.dim}")
    h = m.hamiltonian
    out = 1j * (h @ a - a @ h)
    for L in m.jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        out += Ld @ a @ L - 0.5 * (LdL @ a + a @ LdL)
    return out


@dataclass(frozen=True)
class Superoperator:
    """Column-stacked matrix representation of a generator."""

    dim: int
    matrix: np.ndarray

    def __call__(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))


def build_superoperator(m: LindbladModel,
                        max_dim: int = MAX_SUPEROP_DIM) -> Superoperator:
    """Dense N^2 x N^2 matrix of the generator.

    Trace preservation is checked at construction: vec(I)^dag must
    annihilate the matrix from the left.
    """
    n = m.dim
    if n > max_dim:
        raise SizeLimitError(f"dim {n} exceeds superoperator limit {max_dim}")
    eye = np.eye(n, dtype=complex)
    h = m.hamiltonian
    s = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for L in m.jumps:
        LdL = L.conj().T @ L
        s += (np.kron(L.conj(), L)
              - 0.5 * np.kron(eye, LdL)
              - 0.5 * np.kron(LdL.T, eye))
    defect = np.abs(vec(eye).conj() @ s).max()
    scale = max(float(np.abs(s).max()), 1.0)
    if defect > 1e-10 * scale:
        raise NumericError(f"superoperator is not trace preserving ({defect:.2e})")
    return Superoperator(dim=n, matrix=s)


def liouvillian_spectrum(m: LindbladModel) -> np.ndarray:
    """All eigenvalues of the generator (unsorted)."""
    return np.linalg.eigvals(build_superoperator(m).matrix)


def _rhs(m: LindbladModel):
    def f(_t, y):
        rho = ops.hermitian_part(unvec(y))  # keep the trajectory Hermitian
        return vec(apply_generator(m, rho))
    return f


def propagate(m: LindbladModel, rho0, t: float, method: str = "exact_exp",
              rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Evolve rho0 to time t under exp(t L).

    ``exact_exp`` exponentiates the dense superoperator; ``adaptive_rk``
    integrates the master equation directly (matrix-free), which is the
    right choice once N^2 x N^2 matrices get expensive.
    """
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    rho0 = ops.check_density(rho0)
    if t == 0:
        return rho0
    if method == "exact_exp":
        s = build_superoperator(m)
        out = unvec(scipy.linalg.expm(t * s.matrix) @ vec(rho0))
        return ops.hermitian_part(out)
    if method == "adaptive_rk":
        sol = scipy.integrate.solve_ivp(
            _rhs(m), (0.0, t), vec(rho0), method="DOP853",
            rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"adaptive_rk failed: {sol.message}")
        return ops.hermitian_part(unvec(sol.y[:, -1]))
    raise ValueError(f"unknown method {method!r}")


def propagate_series(m: LindbladModel, rho0, times,
                     method: str = "exact_exp",
                     rtol: float = 1e-10, atol: float = 1e-12) -> list[np.ndarray]:
    """States at each requested time (ascending, starting at >= 0).

    On a uniform grid the exact path exponentiates once and reuses the
    stepper matrix.
    """
    ts = np.asarray(times, dtype=float)
    if ts.size == 0:
        return []
    if np.any(np.diff(ts) < 0) or ts[0] < 0:
        raise ValueError("times must be ascending and nonnegative")
    rho0 = ops.check_density(rho0)
    if method == "adaptive_rk":
        t_end = float(ts[-1])
        if t_end == 0.0:
            return [rho0.copy() for _ in ts]
        sol = scipy.integrate.solve_ivp(
            _rhs(m), (0.0, t_end), vec(rho0), method="DOP853",
            t_eval=ts, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"adaptive_rk failed: {sol.message}")
        return [ops.hermitian_part(unvec(sol.y[:, k])) for k in range(ts.size)]
    s = build_superoperator(m)
    diffs = np.diff(ts)
    if ts.size > 2 and diffs.size > 0 and np.allclose(diffs, diffs[0], rtol=0, atol=1e-12):
        step = scipy.linalg.expm(diffs[0] * s.matrix) if diffs[0] > 0 else np.eye(s.matrix.shape[0])
        v = scipy.linalg.expm(ts[0] * s.matrix) @ vec(rho0) if ts[0] > 0 else vec(rho0)
        out = [ops.hermitian_part(unvec(v))]
        for _ in range(ts.size - 1):
            v = step @ v
            out.append(ops.hermitian_part(unvec(v)))
        return out
    return [ops.hermitian_part(unvec(scipy.linalg.expm(t * s.matrix) @ vec(rho0)))
            for t in ts]


@dataclass(frozen=True)
class SteadyStateResult:
    """Stationary state plus the spectral facts needed to trust it."""

    rho: np.ndarray
    gap: float
    unique: bool
    null_dim: int
    residual: float
    null_space: tuple = field(default=(), repr=False)


def _rho_from_null_vector(v: np.ndarray) -> np.ndarray:
    rho = ops.hermitian_part(unvec(v))
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        # traceless null vector (degenerate manifold); hand back normalized
        # by trace norm so the caller still sees a Hermitian unit object
        rho = rho / np.abs(np.linalg.eigvalsh(rho)).sum()
        return rho
    return rho / tr


def steady_state(m: LindbladModel, tol: float | None = None) -> SteadyStateResult:
    """Solve L(rho) = 0 with trace normalization.

    For small systems the full spectrum is computed; the gap is the
    negated largest real part over the nonzero eigenvalues and the zero
    eigenvalue's numerical multiplicity decides uniqueness. Larger
    systems use shift-inverted Arnoldi around zero plus a largest-real-
    part solve for the gap.
    """
    s = build_superoperator(m)
    n2 = s.matrix.shape[0]
    if m.dim <= FULL_EIG_DIM:
        w, V = np.linalg.eig(s.matrix)
        scale = max(float(np.abs(w).max()), 1.0)
        eff_tol = tol if tol is not None else 1e-9 * scale
        null_idx = np.where(np.abs(w) <= eff_tol)[0]
        if null_idx.size == 0:
            null_idx = np.array([int(np.argmin(np.abs(w)))])
        nonzero = np.delete(w, null_idx)
        gap = float(-nonzero.real.max()) if nonzero.size else np.inf
        null_vecs = [V[:, k] for k in null_idx]
    else:
        scale = float(np.linalg.norm(s.matrix, 1))
        eff_tol = tol if tol is not None else 1e-9 * scale
        sigma = -10 * eff_tol  # tiny shift keeps the factorization regular
        k = min(4, n2 - 2)
        w_small, V_small = scipy.sparse.linalg.eigs(s.matrix, k=k, sigma=sigma)
        null_mask = np.abs(w_small) <= eff_tol
        if not null_mask.any():
            null_mask = np.abs(w_small) == np.abs(w_small).min()
        null_vecs = [V_small[:, i] for i in np.where(null_mask)[0]]
        w_lr, _ = scipy.sparse.linalg.eigs(s.matrix, k=min(8, n2 - 2), which="LR")
        nonzero = w_lr[np.abs(w_lr) > eff_tol]
        gap = float(-nonzero.real.max()) if nonzero.size else np.inf
    null_dim = len(null_vecs)
    # prefer the null vector with the largest trace as the representative
    traces = [abs(np.trace(unvec(v)).real) for v in null_vecs]
    rho = _rho_from_null_vector(null_vecs[int(np.argmax(traces))])
    residual = float(np.abs(apply_generator(m, rho)).max())
    return SteadyStateResult(
        rho=rho, gap=gap, unique=(null_dim == 1), null_dim=null_dim,
        residual=residual,
        null_space=tuple(ops.hermitian_part(unvec(v)) for v in null_vecs))


@dataclass(frozen=True)
class CommutantResult:
    """Outcome of the commutant irreducibility test."""

    irreducible: bool
    commutant_dim: int
    witness: np.ndarray | None = None


def commutant_uniqueness_test(m: LindbladModel, tol: float = 1e-9) -> CommutantResult:
    """Decide uniqueness of the steady state from the commutant.

    Solves [A, H] = [A, L_k] = [A, L_k^dag] = 0 as one stacked linear
    system. A one-dimensional solution space (the scalars) certifies an
    irreducible evolution; otherwise a Hermitian witness not proportional
    to the identity is returned.
    """
    n = m.dim
    eye = np.eye(n, dtype=complex)
    gens = [m.hamiltonian]
    for L in m.jumps:
        gens.append(L)
        gens.append(L.conj().T)
    blocks = [np.kron(g.T, eye) - np.kron(eye, g) for g in gens]
    mat = np.vstack(blocks)
    _u, sv, vh = np.linalg.svd(mat)
    smax = sv[0] if sv.size and sv[0] > 0 else 1.0
    null_dim = int(np.sum(sv <= tol * smax)) + (n * n - sv.size)
    if null_dim <= 1:
        return CommutantResult(irreducible=True, commutant_dim=max(null_dim, 1))
    basis = vh.conj().T[:, -null_dim:]
    vid = vec(eye) / np.sqrt(n)
    witness = None
    best = 0.0
    for k in range(basis.shape[1]):
        a = unvec(basis[:, k] - vid * (vid.conj() @ basis[:, k]))
        for cand in (ops.hermitian_part(a), ops.hermitian_part(1j * a)):
            c = cand - (np.trace(cand) / n) * eye
            nrm = float(np.linalg.norm(c))
            if nrm > best:
                best = nrm
                witness = c / nrm
    return CommutantResult(irreducible=False, commutant_dim=null_dim,
                           witness=witness)


@dataclass(frozen=True)
class KrausMap:
    """Operator-sum representation of a channel."""

    generators: tuple

    def __post_init__(self):
        gs = tuple(ops.as_square(g) for g in self.generators)
        if not gs:
            raise KrausError("a Kraus map needs at least one generator")
        if any(g.shape != gs[0].shape for g in gs):
            raise DimensionError("Kraus generators must share one dimension")
        object.__setattr__(self, "generators", gs)

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]


def kraus_completeness_defect(k: KrausMap) -> float:
    s = sum(g.conj().T @ g for g in k.generators)
    return float(np.abs(s - np.eye(k.dim)).max())


def apply_kraus(k: KrausMap, rho, completeness_tol: float = 1e-8) -> np.ndarray:
    """sum_a K^a rho K^a^dag, guarded by the completeness condition."""
    defect = kraus_completeness_defect(k)
    if defect > completeness_tol:
        raise KrausError(f"Kraus completeness defect {defect:.3e} > {completeness_tol}")
    r = ops.as_square(rho)
    out = np.zeros_like(r)
    for g in k.generators:
        out += g @ r @ g.conj().T
    return out


def dual_kraus(k: KrausMap, x) -> np.ndarray:
    """Adjoint channel sum_a K^a^dag X K^a (unital when complete)."""
    a = ops.as_square(x)
    out = np.zeros_like(a)
    for g in k.generators:
        out += g.conj().T @ a @ g
    return out


def first_order_kraus(m: LindbladModel, dt: float) -> KrausMap:
    """Euler-step Kraus family {I - dt(iH + S/2), sqrt(dt) L_j}.

    Complete only to O(dt^2); pass a matching tolerance to
    :func:`apply_kraus` when iterating it.
    """
    eye = np.eye(m.dim, dtype=complex)
    k0 = eye - dt * (1j * m.hamiltonian + 0.5 * dissipation_rate_operator(m))
    return KrausMap(generators=(k0,) + tuple(np.sqrt(dt) * L for L in m.jumps))


def gauge_transform(m: LindbladModel, a, b: float) -> LindbladModel:
    """Shift jumps by scalars and absorb the compensation into H.

    L_j -> L_j + a_j I and H -> H + (1/2i) sum_j (conj(a_j) L_j -
    a_j L_j^dag) + b I, which leaves the generator invariant.
    """
    coeffs = [complex(x) for x in np.atleast_1d(a)]
    if len(coeffs) != len(m.jumps):
        raise DimensionError(f"{len(coeffs)} gauge scalars for {len(m.jumps)} jumps")
    eye = np.eye(m.dim, dtype=complex)
    new_jumps = [L + c * eye for L, c in zip(m.jumps, coeffs)]
    shift = np.zeros_like(eye)
    for L, c in zip(m.jumps, coeffs):
        shift += np.conj(c) * L - c * L.conj().T
    h = m.hamiltonian + shift / 2j + float(b) * eye
    return LindbladModel(hamiltonian=h, jumps=tuple(new_jumps))


def effective_hamiltonian(m: LindbladModel) -> np.ndarray:
    """Non-Hermitian H_eff = H - (i/2) sum_j L_j^dag L_j."""
    return m.hamiltonian - 0.5j * dissipation_rate_operator(m)


@dataclass(frozen=True)
class TrajectoryEnsembleResult:
    """Monte-Carlo wave-function ensemble summary."""

    n_traj: int
    mean_state: np.ndarray
    jump_counts: np.ndarray
    seed: int
    n_steps: int
    final_states: np.ndarray | None = None


def _trajectory_uniforms(seed: int, index: int, n_steps: int) -> np.ndarray:
    # counter-based stream keyed by (seed, trajectory index): results do not
    # depend on scheduling or chunking
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random((2, n_steps))


def run_trajectories(m: LindbladModel, psi0, t: float, dt: float,
                     n_traj: int, seed: int, keep_states: bool = True,
                     chunk: int = 1024) -> TrajectoryEnsembleResult:
    """First-order jump/no-jump unraveling of the master equation.

    Per step a jump through channel j fires with probability
    dt * <psi|L_j^dag L_j|psi>; otherwise the state drifts under the
    non-Hermitian effective Hamiltonian and is renormalized. The ensemble
    mean over the per-trajectory streams converges to the master-equation
    solution.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    nrm = np.linalg.norm(psi0)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"initial state norm {nrm} != 1")
    psi0 = psi0 / nrm
    rate_op = dissipation_rate_operator(m)
    max_rate = float(np.linalg.eigvalsh(rate_op).max()) if m.jumps else 0.0
    if dt * max_rate > 0.1:
        raise ValueError(
            f"dt * max rate = {dt * max_rate:.3f} > 0.1; reduce the step")
    n_steps = int(round(t / dt))
    if abs(n_steps * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not an integer number of steps dt = {dt}")
    drift = ops.matrix_exp(-1j * effective_hamiltonian(m), dt)
    n_ch = len(m.jumps)
    dim = psi0.size
    jump_counts = np.zeros(n_ch, dtype=np.int64)
    acc = np.zeros((dim, dim), dtype=complex)
    finals = np.empty((n_traj, dim), dtype=complex) if keep_states else None

    for start in range(0, n_traj, chunk):
        stop = min(start + chunk, n_traj)
        size = stop - start
        u = np.stack([_trajectory_uniforms(seed, k, n_steps)
                      for k in range(start, stop)])  # (size, 2, n_steps)
        psi = np.tile(psi0, (size, 1))
        for step in range(n_steps):
            if n_ch:
                lpsi = np.stack([psi @ L.T for L in m.jumps])  # (n_ch, size, dim)
                probs = dt * np.sum(np.abs(lpsi) ** 2, axis=2).T  # (size, n_ch)
                ptot = probs.sum(axis=1)
            else:
                ptot = np.zeros(size)
            do_jump = u[:, 0, step] < ptot
            cold = ~do_jump
            if cold.any():
                out = psi[cold] @ drift.T
                out /= np.linalg.norm(out, axis=1, keepdims=True)
                psi[cold] = out
            if do_jump.any():
                rows = np.where(do_jump)[0]
                cdf = np.cumsum(probs[rows], axis=1) / ptot[rows, None]
                chans = (u[rows, 1, step, None] > cdf).sum(axis=1)
                chans = np.minimum(chans, n_ch - 1)
                sel = lpsi[chans, rows]
                sel /= np.linalg.norm(sel, axis=1, keepdims=True)
                psi[rows] = sel
                jump_counts += np.bincount(chans, minlength=n_ch)
        for row in psi:  # strict index order keeps sums chunk independent
            acc += np.outer(row, row.conj())
        if keep_states:
            finals[start:stop] = psi

    mean_state = ops.hermitian_part(acc / n_traj)
    mean_state = ops.check_density(mean_state, trace_tol=1e-9, eig_tol=1e-6)
    return TrajectoryEnsembleResult(
        n_traj=n_traj, mean_state=mean_state, jump_counts=jump_counts,
        seed=seed, n_steps=n_steps, final_states=finals)


def random_lindblad_model(dim: int, n_jumps: int,
                          rng: np.random.Generator,
                          require_irreducible: bool = False,
                          max_draws: int = 50) -> LindbladModel:
    """Random model for property tests (Gaussian H, Ginibre jumps)."""
    for _ in range(max_draws):
        h = ops.random_hermitian(dim, rng)
        jumps = tuple(
            (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
            / np.sqrt(2 * dim)
            for _ in range(n_jumps))
        m = LindbladModel(hamiltonian=h, jumps=jumps)
        if not require_irreducible or commutant_uniqueness_test(m).irreducible:
            return m
    raise ConvergenceError("could not draw an irreducible random model")
