"""Microscopic Lindblad construction in the weak-coupling / secular regime.

Starting from a system Hamiltonian and Hermitian coupling operators, the
coupling operators are resolved into spectral jump operators indexed by
Bohr frequencies. Together with per-frequency bath matrices (dissipative
part gamma, Hamiltonian-shift part sigma) this yields the secular GKSL
generator, the induced Lamb shift, a detailed-balance check, and the
classical master equation obeyed by the populations when the spectrum is
non-degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import operators as ops
from .errors import (DegeneracyError, DimensionError, FrequencyError,
                     NumericError, PositivityError)
from .lindblad import LindbladModel


@dataclass(frozen=True)
class CouplingSet:
    """Hermitian system operators, one per dissipation channel."""

    operators: tuple
    labels: tuple = ()

    def __post_init__(self):
        mats = tuple(ops.hermitize(x) for x in self.operators)
        if not mats:
            raise DimensionError("coupling set must not be empty")
        if any(m.shape != mats[0].shape for m in mats):
            raise DimensionError("coupling operators must share one dimension")
        for m in mats:
            m.setflags(write=False)
        labels = self.labels or tuple(f"X{i}" for i in range(len(mats)))
        if len(labels) != len(mats):
            raise DimensionError("one label per coupling operator required")
        object.__setattr__(self, "operators", mats)
        object.__setattr__(self, "labels", tuple(labels))

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class BohrSpectrum:
    """Spectral jump operators of a coupling set, grouped by Bohr frequency.

    ``jump_ops[w][i]`` is the part of coupling operator i that lowers the
    system energy by ``frequencies[w]``. The set is closed under negation
    with X(-w) = X(w)^dag and sums back to the original couplings.
    """

    frequencies: np.ndarray
    jump_ops: tuple          # jump_ops[freq_index][coupling_index]
    freq_tol: float
    hamiltonian: np.ndarray | None = None

    @property
    def n_couplings(self) -> int:
        return len(self.jump_ops[0])

    def index_of(self, omega: float) -> int:
        k = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[k] - omega) > max(self.freq_tol, 1e-12):
            raise FrequencyError(f"no Bohr frequency near {omega}")
        return k

    def ops_at(self, omega: float) -> tuple:
        return self.jump_ops[self.index_of(omega)]


def _cluster_nonnegative(values: np.ndarray, tol: float) -> list[float]:
    out: list[list[float]] = []
    for v in np.sort(values):
        if out and v - out[-1][-1] <= tol:
            out[-1].append(v)
        else:
            out.append([v])
    return [float(np.mean(group)) for group in out]


def bohr_decompose(h_s, couplings: CouplingSet,
                   freq_tol: float | None = None) -> BohrSpectrum:
    """Resolve coupling operators into jump operators between energy levels.

    Frequencies closer than ``freq_tol`` are merged into one cluster; the
    default tolerance scales with the spectral width of the Hamiltonian.
    """
    h = ops.hermitize(h_s)
    if h.shape[0] != couplings.dim:
        raise DimensionError("Hamiltonian and couplings differ in dimension")
    w, v = np.linalg.eigh(h)
    if freq_tol is None:
        freq_tol = max(1e-8 * float(np.abs(w).max()), 1e-14)
    if freq_tol <= 0:
        raise ValueError("freq_tol must be positive")
    diffs = w[None, :] - w[:, None]          # diffs[n, m] = eps_m - eps_n
    pos = _cluster_nonnegative(diffs[diffs >= -freq_tol / 2].ravel(), freq_tol)
    pos = [x for x in pos if x > freq_tol]
    freqs = np.array([-x for x in reversed(pos)] + [0.0] + pos)

    x_eig = [v.conj().T @ x @ v for x in couplings.operators]
    jump_ops = []
    for omega in freqs:
        mask = np.abs(diffs - omega) <= freq_tol
        per_coupling = tuple(v @ (xe * mask) @ v.conj().T for xe in x_eig)
        jump_ops.append(per_coupling)
    return BohrSpectrum(frequencies=freqs, jump_ops=tuple(jump_ops),
                        freq_tol=float(freq_tol), hamiltonian=h)


@dataclass(frozen=True)
class BathSpectralFunction:
    """Per-frequency bath matrices gamma (dissipation) and sigma (shift).

    gamma(w) must be Hermitian positive semi-definite; sigma(w) Hermitian.
    The half-Fourier transform of the bath correlators is recovered as
    Gamma(w) = (gamma(w) + i sigma(w)) / 2.
    """

    frequencies: np.ndarray
    gammas: tuple
    sigmas: tuple
    beta: float | None = None
    freq_tol: float = 1e-8

    @property
    def n_couplings(self) -> int:
        return self.gammas[0].shape[0]

    def index_of(self, omega: float) -> int:
        k = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[k] - omega) > max(self.freq_tol, 1e-12):
            raise FrequencyError(f"bath has no entry at frequency {omega}")
        return k

    def gamma_at(self, omega: float) -> np.ndarray:
        return self.gammas[self.index_of(omega)]

    def sigma_at(self, omega: float) -> np.ndarray:
        return self.sigmas[self.index_of(omega)]

    def half_transform_at(self, omega: float) -> np.ndarray:
        return (self.gamma_at(omega) + 1j * self.sigma_at(omega)) / 2


def bath_from_tables(frequencies, gammas, sigmas=None, beta: float | None = None,
                     freq_tol: float = 1e-8) -> BathSpectralFunction:
    """Build a bath from explicit per-frequency matrices (or scalars)."""
    freqs = np.asarray(frequencies, dtype=float)
    gs = []
    for g in gammas:
        gm = np.atleast_2d(np.asarray(g, dtype=complex))
        gm = ops.hermitize(gm)
        wmin = float(np.linalg.eigvalsh(gm).min())
        if wmin < -1e-10 * max(1.0, float(np.abs(gm).max())):
            raise PositivityError(f"gamma matrix has eigenvalue {wmin:.3e}")
        gs.append(gm)
    if sigmas is None:
        ss = [np.zeros_like(g) for g in gs]
    else:
        ss = [ops.hermitize(np.atleast_2d(np.asarray(s, dtype=complex)))
              for s in sigmas]
    if len(gs) != freqs.size or len(ss) != freqs.size:
        raise DimensionError("one gamma and sigma per frequency required")
    if any(g.shape != gs[0].shape for g in gs + ss):
        raise DimensionError("bath matrices must share one dimension")
    return BathSpectralFunction(frequencies=freqs, gammas=tuple(gs),
                                sigmas=tuple(ss), beta=beta,
                                freq_tol=freq_tol)


def flat_bath(frequencies, strengths, beta: float | None = None) -> BathSpectralFunction:
    """Frequency-independent diagonal bath (white noise)."""
    freqs = np.asarray(frequencies, dtype=float)
    s = np.atleast_1d(np.asarray(strengths, dtype=float))
    if np.any(s < 0):
        raise PositivityError("bath strengths must be nonnegative")
    g = np.diag(s).astype(complex)
    return bath_from_tables(freqs, [g] * freqs.size, beta=beta)


def _ohmic_gamma(omega: float, strength: float, beta: float, cutoff: float) -> float:
    cut = np.exp(-abs(omega) / cutoff) if np.isfinite(cutoff) else 1.0
    if np.isinf(beta):
        return strength * omega * cut if omega > 0 else 0.0
    if abs(omega) < 1e-14:
        return strength / beta
    return strength * omega * cut / (1.0 - np.exp(-beta * omega))


def ohmic_thermal_bath(frequencies, strength: float, beta: float,
                       cutoff: float = np.inf,
                       n_couplings: int = 1) -> BathSpectralFunction:
    """Ohmic bath with thermal occupation factor.

    gamma(w) = strength * w * exp(-|w|/cutoff) / (1 - exp(-beta w))
    extended continuously through w = 0; this satisfies detailed balance
    gamma(w) exp(-beta w) = gamma(-w) for every cutoff.
    """
    if strength < 0:
        raise PositivityError("bath strength must be nonnegative")
    freqs = np.asarray(frequencies, dtype=float)
    gs = [np.eye(n_couplings, dtype=complex)
          * _ohmic_gamma(float(w), strength, beta, cutoff) for w in freqs]
    return bath_from_tables(freqs, gs, beta=beta)


def thermal_qubit_bath(omega0: float, gamma_down: float,
                       beta: float) -> BathSpectralFunction:
    """Single-channel bath for a two-level system at inverse temperature beta.

    Emission rate gamma_down at +omega0 and absorption rate
    gamma_down * exp(-beta omega0) at -omega0 (detailed balance).
    """
    gamma_up = gamma_down * np.exp(-beta * omega0)
    return bath_from_tables(
        [-omega0, 0.0, omega0],
        [np.array([[gamma_up]]), np.array([[0.0]]), np.array([[gamma_down]])],
        beta=beta)


def lamb_shift(spectrum: BohrSpectrum, bath: BathSpectralFunction) -> np.ndarray:
    """Bath-induced Hamiltonian correction sum sigma^ij(w) X^i(w)^dag X^j(w)."""
    dim = spectrum.jump_ops[0][0].shape[0]
    shift = np.zeros((dim, dim), dtype=complex)
    for k, omega in enumerate(spectrum.frequencies):
        sig = bath.sigma_at(omega)
        xs = spectrum.jump_ops[k]
        for i in range(len(xs)):
            for j in range(len(xs)):
                if sig[i, j] != 0:
                    shift += sig[i, j] * xs[i].conj().T @ xs[j]
    return shift


def build_secular_lindblad(spectrum: BohrSpectrum,
                           bath: BathSpectralFunction) -> LindbladModel:
    """Assemble the secular GKSL generator from spectrum and bath.

    Each frequency's gamma matrix is unitarily diagonalized; the modes
    with eigenvalue lambda_k become jump operators
    sqrt(lambda_k) sum_i conj(v_k(i)) X^i(w). Eigenvalues below
    1e-12 * max(lambda) are dropped. The returned Hamiltonian is the
    system Hamiltonian plus the Lamb shift, which commutes with it.
    """
    if bath.n_couplings != spectrum.n_couplings:
        raise DimensionError(
            f"bath has {bath.n_couplings} channels, spectrum {spectrum.n_couplings}")
    if spectrum.hamiltonian is None:
        raise DimensionError("spectrum does not carry its Hamiltonian")
    jumps = []
    for k, omega in enumerate(spectrum.frequencies):
        gam = bath.gamma_at(omega)  # raises FrequencyError when missing
        lam, vmat = np.linalg.eigh(gam)
        scale = max(float(lam.max()), 0.0)
        if float(lam.min()) < -1e-8 * max(scale, 1.0):
            raise PositivityError(
                f"gamma({omega}) has eigenvalue {float(lam.min()):.3e}")
        xs = spectrum.jump_ops[k]
        for mode in range(lam.size):
            if lam[mode] <= 1e-12 * max(scale, 1e-300):
                continue
            L = np.zeros_like(xs[0])
            for i in range(len(xs)):
                L += np.conj(vmat[i, mode]) * xs[i]
            L = np.sqrt(lam[mode]) * L
            if float(np.abs(L).max()) > 1e-14:
                jumps.append(L)
    h = spectrum.hamiltonian
    shift = lamb_shift(spectrum, bath)
    comm = h @ shift - shift @ h
    scale = max(float(np.abs(h).max()) * float(np.abs(shift).max()), 1e-300)
    if float(np.abs(comm).max()) > 1e-9 * max(scale, 1.0):
        raise NumericError("Lamb shift does not commute with the Hamiltonian")
    return LindbladModel(hamiltonian=h + shift, jumps=tuple(jumps))


def secular_model(h_s, couplings: CouplingSet, bath: BathSpectralFunction,
                  freq_tol: float | None = None) -> LindbladModel:
    """One-call microscopic construction from H_s, couplings and bath."""
    spectrum = bohr_decompose(h_s, couplings, freq_tol=freq_tol)
    return build_secular_lindblad(spectrum, bath)


@dataclass(frozen=True)
class DetailedBalanceReport:
    """Residuals of gamma(w) e^{-beta w} = gamma(-w)^T per frequency."""

    frequencies: np.ndarray
    residuals: np.ndarray
    max_residual: float
    passed: bool


def check_detailed_balance(bath: BathSpectralFunction, beta: float,
                           tol: float) -> DetailedBalanceReport:
    """Verify the rate condition that makes the Gibbs state stationary.

    Every frequency must have its negation in the table; the residual of
    each pair is reported once, anchored at the nonnegative member.
    """
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    for omega in bath.frequencies:
        bath.index_of(-float(omega))  # FrequencyError when the partner is absent
    freqs = np.asarray([w for w in bath.frequencies if w >= 0.0])
    residuals = []
    for omega in freqs:
        r = bath.gamma_at(float(omega)) * np.exp(-beta * float(omega)) \
            - bath.gamma_at(-float(omega)).T
        residuals.append(float(np.abs(r).max()))
    residuals = np.asarray(residuals)
    mx = float(residuals.max()) if residuals.size else 0.0
    return DetailedBalanceReport(frequencies=freqs, residuals=residuals,
                                 max_residual=mx, passed=bool(mx <= tol))


@dataclass(frozen=True)
class PauliMasterModel:
    """Classical rate equation obeyed by the populations.

    ``rates[k, n]`` is the transition rate k -> n; ``generator`` is the
    stochastic matrix M with M[n, k] = W(k -> n) off the diagonal and
    column sums zero.
    """

    rates: np.ndarray
    generator: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.rates, dtype=float)
        m = np.asarray(self.generator, dtype=float)
        col = np.abs(m.sum(axis=0)).max() if m.size else 0.0
        if col > 1e-12 * max(1.0, float(np.abs(m).max())):
            raise NumericError(f"generator columns sum to {col:.3e}, not 0")
        off = m - np.diag(np.diag(m))
        if off.size and float(off.min()) < -1e-12:
            raise NumericError("negative off-diagonal rate in generator")
        object.__setattr__(self, "rates", w)
        object.__setattr__(self, "generator", m)
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))

    @property
    def n_levels(self) -> int:
        return self.energies.size


def extract_pauli_model(spectrum: BohrSpectrum, bath: BathSpectralFunction,
                        h_s) -> PauliMasterModel:
    """Transition rates between energy eigenstates.

    W(k -> n) = sum_ij gamma^ij(eps_k - eps_n) <k|X^i|n><n|X^j|k>, which
    requires a non-degenerate spectrum for the populations to close on
    themselves.
    """
    h = ops.hermitize(h_s)
    w, v = np.linalg.eigh(h)
    gaps = np.abs(w[1:] - w[:-1])
    if gaps.size and float(gaps.min()) <= spectrum.freq_tol:
        raise DegeneracyError(
            f"spectrum gap {float(gaps.min()):.3e} <= freq_tol; populations "
            "and coherences do not decouple")
    # reconstruct the couplings from completeness of the spectral operators
    n_c = spectrum.n_couplings
    x_eig = []
    for i in range(n_c):
        x = sum(spectrum.jump_ops[k][i] for k in range(spectrum.frequencies.size))
        x_eig.append(v.conj().T @ x @ v)
    n = w.size
    rates = np.zeros((n, n))
    for k in range(n):
        for m in range(n):
            if k == m:
                continue
            gam = bath.gamma_at(float(w[k] - w[m]))
            val = 0.0 + 0.0j
            for i in range(n_c):
                for j in range(n_c):
                    val += gam[i, j] * x_eig[i][k, m] * x_eig[j][m, k]
            if abs(val.imag) > 1e-10 * max(abs(val), 1.0):
                raise NumericError(f"complex transition rate {val}")
            if val.real < -1e-12:
                raise PositivityError(f"negative transition rate {val.real:.3e}")
            rates[k, m] = max(val.real, 0.0)
    gen = rates.T.copy()
    np.fill_diagonal(gen, 0.0)
    gen -= np.diag(rates.sum(axis=1))
    return PauliMasterModel(rates=rates, generator=gen, energies=w)


def evolve_pauli(model: PauliMasterModel, p0, t: float) -> np.ndarray:
    """Propagate a population vector: p(t) = exp(t M) p0."""
    p = np.asarray(p0, dtype=float)
    if p.size != model.n_levels:
        raise DimensionError(f"p0 has {p.size} entries for {model.n_levels} levels")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("p0 must be a probability vector")
    return scipy.linalg.expm(t * model.generator) @ p


def stationary_populations(model: PauliMasterModel) -> np.ndarray:
    """Null vector of the rate matrix, normalized to a distribution."""
    _w, _s, vh = np.linalg.svd(model.generator)
    p = np.real(vh[-1])
    if p.sum() < 0:
        p = -p
    p = np.clip(p, 0.0, None)
    return p / p.sum()
