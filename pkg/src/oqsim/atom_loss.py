"""Hard-core boson lattice gas with K-body losses.

The gas lives on L sites with at most one particle per site (spin-1/2
language), hops with amplitude J, optionally sits in a harmonic trap,
and loses K adjacent particles at a time through jump operators
sqrt(Gamma) * prod_{l=0}^{K-1} sigma^-_{j+l}. Observables are the mean
density, the fermionized momentum occupation n(k), and a log-log decay
fit with a curvature diagnostic that flags non-power-law behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .errors import DimensionError, SizeLimitError
from .lindblad import LindbladModel, propagate_series

MAX_SITES = 12


@dataclass(frozen=True)
class LossModel:
    """Lattice, hopping, loss order/rate, boundary and optional trap."""

    n_sites: int
    hopping: float
    loss_order: int            # K, number of adjacent particles lost per event
    loss_rate: float           # Gamma
    boundary: str = "open"     # "open" or "periodic"
    trap_strength: float = 0.0

    def __post_init__(self):
        if self.loss_order < 1 or self.loss_order > self.n_sites:
            raise DimensionError(
                f"loss order {self.loss_order} outside 1..{self.n_sites}")
        if self.loss_rate < 0:
            raise ValueError("loss rate must be nonnegative")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.n_sites > MAX_SITES:
            raise SizeLimitError(f"{self.n_sites} sites exceed limit {MAX_SITES}")

    def trap_potential(self) -> np.ndarray:
        j = np.arange(1, self.n_sites + 1, dtype=float)
        return self.trap_strength * (j - (self.n_sites + 1) / 2) ** 2


def build_loss_lindblad(model: LossModel) -> LindbladModel:
    """Hopping-plus-trap Hamiltonian with one loss window per position.

    Open boundaries give L - K + 1 windows, periodic L (wrapping).
    """
    n = model.n_sites
    num = ops.SIGMA_PLUS @ ops.SIGMA_MINUS  # |1><1|
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    bonds = [(j, j + 1) for j in range(1, n)]
    if model.boundary == "periodic" and n > 2:
        bonds.append((n, 1))
    for (a, b) in bonds:
        h += model.hopping * (
            ops.site_operator(ops.SIGMA_PLUS, a, n) @ ops.site_operator(ops.SIGMA_MINUS, b, n)
            + ops.site_operator(ops.SIGMA_MINUS, a, n) @ ops.site_operator(ops.SIGMA_PLUS, b, n))
    if model.trap_strength != 0.0:
        for j, v in enumerate(model.trap_potential(), start=1):
            h += v * ops.site_operator(num, j, n)
    jumps = []
    if model.loss_rate > 0:
        starts = range(1, n - model.loss_order + 2) if model.boundary == "open" \
            else range(1, n + 1)
        for j in starts:
            L = np.eye(2 ** n, dtype=complex)
            for l in range(model.loss_order):
                site = (j + l - 1) % n + 1
                L = L @ ops.site_operator(ops.SIGMA_MINUS, site, n)
            jumps.append(np.sqrt(model.loss_rate) * L)
    return LindbladModel(hamiltonian=h, jumps=tuple(jumps))


def product_state(bits) -> np.ndarray:
    """Density matrix of a site-occupation product state, e.g. [1,0,1]."""
    vecs = [ops.basis_state(2, int(b)) for b in bits]
    v = vecs[0]
    for w in vecs[1:]:
        v = np.kron(v, w)
    return ops.projector(v)


def mean_density(rho, n_sites: int) -> float:
    num = ops.SIGMA_PLUS @ ops.SIGMA_MINUS
    total = sum(float(np.real(np.trace(ops.site_operator(num, j, n_sites) @ rho)))
                for j in range(1, n_sites + 1))
    return total / n_sites


def density_trajectory(model: LossModel, rho0, times) -> np.ndarray:
    """Mean density n(t) = (1/L) sum_j <n_j> at the requested times."""
    lind = build_loss_lindblad(model)
    method = "exact_exp" if model.n_sites <= 4 else "adaptive_rk"
    states = propagate_series(lind, rho0, times, method=method,
                              rtol=1e-11, atol=1e-13)
    return np.array([mean_density(r, model.n_sites) for r in states])


def fermionic_two_point(rho, n_sites: int) -> np.ndarray:
    """Jordan-Wigner two-point function G[j, l] = <c_j^dag c_l>."""
    cs = ops.jordan_wigner_all(n_sites)
    g = np.empty((n_sites, n_sites), dtype=complex)
    r = ops.as_square(rho)
    for j in range(n_sites):
        for l in range(n_sites):
            g[j, l] = np.trace(cs[j].conj().T @ cs[l] @ r)
    return g


def momentum_occupation(model: LossModel, rho) -> tuple[np.ndarray, np.ndarray]:
    """Occupation n(k) of the fermionized modes at k = 2 pi q / L.

    n(k) = (1/L) sum_jl e^{i k (j-l)} <c_j^dag c_l>; the sum over k
    returns the total particle number. Periodic boundaries make the
    lattice momenta exact; with open boundaries the same transform is a
    windowed diagnostic rather than a mode occupation.
    """
    n = model.n_sites
    g = fermionic_two_point(rho, n)
    ks = 2 * np.pi * np.arange(n) / n
    sites = np.arange(n)
    nk = np.empty(n)
    for idx, k in enumerate(ks):
        phase = np.exp(1j * k * sites)
        nk[idx] = float(np.real(phase @ g @ phase.conj() / n))
    return ks, nk


def first_fourier_mode(ks: np.ndarray, nk: np.ndarray) -> complex:
    """First Fourier coefficient of n(k); zero singles out the slow-decay case."""
    return complex(np.sum(nk * np.exp(1j * ks)) / ks.size)


@dataclass(frozen=True)
class DecayFit:
    """Log-log slope of n(t) with a curvature-based power-law diagnostic."""

    alpha: float
    stderr: float
    curvature: float
    curvature_stderr: float
    non_power_law: bool
    n_points: int


def decay_exponent_fit(times, densities, window: tuple[float, float],
                       curvature_tol: float = 0.02) -> DecayFit:
    """Least-squares slope of log n vs log t inside the window.

    A quadratic term in log t measures curvature; a power law has none,
    so a curvature beyond ``curvature_tol`` (and four standard errors)
    raises the non-power-law flag. At accessible sizes the fitted slope
    is a trend diagnostic, not a thermodynamic-limit exponent.
    """
    t = np.asarray(times, dtype=float)
    n = np.asarray(densities, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < 8:
        raise ValueError(f"only {int(mask.sum())} points in window, need >= 8")
    if np.any(n[mask] <= 0):
        raise ValueError("densities must be positive inside the fit window")
    x = np.log(t[mask])
    y = np.log(n[mask])
    npts = int(mask.sum())
    xc = x - x.mean()
    slope = float(np.sum(xc * (y - y.mean())) / np.sum(xc ** 2))
    resid = y - (y.mean() + slope * xc)
    dof = max(npts - 2, 1)
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / np.sum(xc ** 2)))
    # quadratic refit for the curvature statistic
    coeffs, cov = np.polyfit(x, y, 2, cov=True)
    curv = float(coeffs[0])
    curv_err = float(np.sqrt(cov[0, 0]))
    flag = abs(curv) > max(curvature_tol, 4.0 * curv_err)
    return DecayFit(alpha=slope, stderr=stderr, curvature=curv,
                    curvature_stderr=curv_err, non_power_law=bool(flag),
                    n_points=npts)
