"""Built-in verification suite.

Every acceptance-grade property of the package is expressed as a check
function returning (passed, detail). The CLI ``verify`` subcommand and
the test suite both run these, so a green suite here is the same
statement as a green CI run. Checks are isolated: one failure (or crash)
never prevents the others from running.
"""

from __future__ import annotations

import time
import traceback
from dataclasses import dataclass

import numpy as np

from . import atom_loss, collisions, experiments, free_fermions, weak_coupling
from . import lindblad as lb
from . import operators as ops

TRAJECTORY_SEED = 20240901


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _assert(cond: bool, msg: str, failures: list) -> None:
    if not cond:
        failures.append(msg)


def structural_invariants(rho, failures: list, label: str,
                          trace_tol: float = 1e-9, eig_tol: float = 1e-8,
                          herm_tol: float = 1e-10) -> None:
    """Trace, positivity and Hermiticity bounds every propagated state obeys."""
    tr_dev = abs(float(np.trace(rho).real) - 1.0)
    herm = ops.hermiticity_defect(rho)
    wmin = float(np.linalg.eigvalsh(ops.hermitian_part(rho)).min())
    _assert(tr_dev <= trace_tol, f"{label}: trace deviation {tr_dev:.2e}", failures)
    _assert(herm <= herm_tol, f"{label}: hermiticity defect {herm:.2e}", failures)
    _assert(wmin >= -eig_tol, f"{label}: min eigenvalue {wmin:.2e}", failures)


# --------------------------------------------------------------------- 1
def check_gibbs_relaxation():
    """Thermal qubit relaxes to the Boltzmann populations (1e-6)."""
    t0 = time.perf_counter()
    beta, omega0, gamma_down = 1.0, 1.0, 1.0
    model = experiments.thermal_qubit_model(omega0, gamma_down, beta)
    rho0 = ops.projector(ops.basis_state(2, 1))
    rho = lb.propagate(model, rho0, 50.0 / gamma_down)
    z = 1.0 + np.exp(-beta * omega0)
    err = max(abs(float(rho[0, 0].real) - 1.0 / z),
              abs(float(rho[1, 1].real) - np.exp(-beta * omega0) / z))
    elapsed = time.perf_counter() - t0
    failures: list = []
    _assert(err <= 1e-6, f"population error {err:.2e} > 1e-6", failures)
    _assert(elapsed < 1.0, f"runtime {elapsed:.2f}s >= 1s", failures)
    structural_invariants(rho, failures, "gibbs")
    return not failures, f"error={err:.2e} t={elapsed:.2f}s " + "; ".join(failures)


# --------------------------------------------------------------------- 2
def _random_secular_setup(dim: int, rng: np.random.Generator):
    """Random non-degenerate Hamiltonian, couplings and a PSD bath."""
    while True:
        w = np.sort(rng.uniform(-2, 2, size=dim))
        if np.diff(w).min() > 0.3:
            break
    u = np.linalg.qr(rng.normal(size=(dim, dim))
                     + 1j * rng.normal(size=(dim, dim)))[0]
    h_s = (u * w) @ u.conj().T
    coup = weak_coupling.CouplingSet(operators=(
        ops.random_hermitian(dim, rng), ops.random_hermitian(dim, rng)))
    spectrum = weak_coupling.bohr_decompose(h_s, coup, freq_tol=1e-6)
    gammas, sigmas = [], []
    for _omega in spectrum.frequencies:
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        gammas.append(a @ a.conj().T / 2)
        sigmas.append(ops.random_hermitian(2, rng, scale=0.2))
    bath = weak_coupling.bath_from_tables(spectrum.frequencies, gammas,
                                          sigmas, freq_tol=1e-6)
    return h_s, coup, spectrum, bath


def check_pauli_lindblad_consistency():
    """Populations of the secular model follow the classical rate equation (1e-8)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    failures: list = []
    for dim in (2, 3, 4):
        h_s, _coup, spectrum, bath = _random_secular_setup(dim, rng)
        model = weak_coupling.build_secular_lindblad(spectrum, bath)
        pauli = weak_coupling.extract_pauli_model(spectrum, bath, h_s)
        _w, v = np.linalg.eigh(ops.hermitize(h_s))
        rho0 = ops.random_density(dim, rng)
        p0 = np.real(np.diag(v.conj().T @ rho0 @ v))
        p0 = np.clip(p0, 0, None)
        p0 /= p0.sum()
        rho0 = (v * p0) @ v.conj().T  # diagonal in the eigenbasis
        for t in (0.3, 1.0):
            rho_t = lb.propagate(model, rho0, t)
            pops = np.real(np.diag(v.conj().T @ rho_t @ v))
            p_t = weak_coupling.evolve_pauli(pauli, p0, t)
            err = float(np.abs(pops - p_t).max())
            _assert(err <= 1e-8, f"dim {dim} t={t}: deviation {err:.2e}", failures)
            structural_invariants(rho_t, failures, f"pauli dim{dim}")
    elapsed = time.perf_counter() - t0
    _assert(elapsed < 5.0, f"runtime {elapsed:.2f}s >= 5s", failures)
    return not failures, f"t={elapsed:.2f}s " + "; ".join(failures)


# --------------------------------------------------------------------- 3
def check_spectral_placement():
    """Irreducible models: one zero eigenvalue, rest strictly damped."""
    rng = np.random.default_rng(11)
    failures: list = []
    for trial in range(20):
        dim = 2 + trial % 3
        model = lb.random_lindblad_model(dim, 2, rng, require_irreducible=True)
        spec = lb.liouvillian_spectrum(model)
        n_zero = int(np.sum(np.abs(spec) <= 1e-9))
        others = spec[np.abs(spec) > 1e-9]
        comm = lb.commutant_uniqueness_test(model)
        _assert(n_zero == 1, f"trial {trial}: {n_zero} zero eigenvalues", failures)
        _assert(bool(np.all(others.real < -1e-9)),
                f"trial {trial}: nonzero eigenvalue with Re >= -1e-9", failures)
        _assert(comm.irreducible == (n_zero == 1),
                f"trial {trial}: commutant disagrees with multiplicity", failures)
    return not failures, f"20 models checked " + "; ".join(failures)


# --------------------------------------------------------------------- 4
def check_trajectory_unraveling():
    """Monte-Carlo mean matches the analytic amplitude-damping decay."""
    t0 = time.perf_counter()
    gamma, omega0, t, dt, n_traj = 1.0, 1.0, 1.0, 1e-3, 10_000
    model = lb.LindbladModel(
        hamiltonian=0.5 * omega0 * np.asarray(ops.SIGMA_Z),
        jumps=(np.sqrt(gamma) * np.asarray(ops.SIGMA_MINUS),))
    psi0 = ops.basis_state(2, 1)
    res = lb.run_trajectories(model, psi0, t, dt, n_traj, seed=TRAJECTORY_SEED)
    p1_traj = np.abs(res.final_states[:, 1]) ** 2
    mean_p1 = float(p1_traj.mean())
    sem = float(p1_traj.std(ddof=1) / np.sqrt(n_traj))
    err = abs(mean_p1 - np.exp(-1.0))
    elapsed = time.perf_counter() - t0
    failures: list = []
    _assert(err <= 3 * sem, f"error {err:.2e} > 3 SEM {3 * sem:.2e}", failures)
    _assert(err <= 5e-3, f"error {err:.2e} > 5e-3", failures)
    _assert(elapsed < 30.0, f"runtime {elapsed:.1f}s >= 30s", failures)
    structural_invariants(res.mean_state, failures, "trajectory mean",
                          eig_tol=1e-6)
    return not failures, (f"mean p1={mean_p1:.5f} target={np.exp(-1.0):.5f} "
                          f"sem={sem:.1e} t={elapsed:.1f}s " + "; ".join(failures))


# --------------------------------------------------------------------- 5
def check_collision_continuum():
    """1/sqrt(tau)-scaled collisions converge to the Lindblad limit at order 1."""
    g, tau0, t_final = 0.9, 1.0, 1.0
    base = collisions.exchange_collision_spec(g, tau0, n_ancilla=0.0, omega0=1.0)
    ref = collisions.exchange_lindblad_reference(g, tau0, n_ancilla=0.0, omega0=1.0)
    taus = np.array([0.2, 0.1, 0.05, 0.025]) * tau0
    rho0 = ops.projector(ops.basis_state(2, 1))
    report = collisions.continuum_limit_check(base, ref, taus, t_final, rho0)
    failures: list = []
    _assert(abs(report.fitted_order - 1.0) <= 0.3,
            f"fitted order {report.fitted_order:.3f} outside 1.0 +- 0.3", failures)
    unitary = lb.LindbladModel(hamiltonian=ref.hamiltonian, jumps=())
    control = collisions.continuum_limit_check(base, unitary, taus, t_final,
                                               rho0, scale_interaction=False)
    _assert(bool(np.all(np.diff(control.distances) < 0)),
            "unscaled control error not decreasing toward the unitary limit",
            failures)
    _assert(control.distances[-1] < 0.5 * control.distances[0],
            f"unscaled control barely decays: {control.distances}", failures)
    return not failures, (f"order={report.fitted_order:.3f} "
                          f"control={control.distances[-1]:.2e} "
                          + "; ".join(failures))


# --------------------------------------------------------------------- 6
def check_lyapunov_oracle():
    """Gaussian reduction equals the exact many-body evolution (1e-7)."""
    t0 = time.perf_counter()
    failures: list = []
    for n_sites in (2, 3):
        model = free_fermions.boundary_driven_chain(
            n_sites, hopping=1.0, coupling=0.7, n_left=0.9, n_right=0.2)
        manybody = free_fermions.to_manybody_lindblad(model)
        c0 = np.zeros((n_sites, n_sites), dtype=complex)
        rho0 = ops.projector(ops.basis_state(2 ** n_sites, 0))  # vacuum
        times = np.linspace(0.3, 3.0, 10)
        states = lb.propagate_series(manybody, rho0, times)
        for t, rho in zip(times, states):
            c_gauss = free_fermions.evolve_correlations(model, c0, float(t))
            c_exact = free_fermions.correlation_from_state(rho, n_sites)
            err = float(np.abs(c_gauss - c_exact).max())
            _assert(err <= 1e-7, f"L={n_sites} t={t:.2f}: deviation {err:.2e}",
                    failures)
            structural_invariants(rho, failures, f"oracle L{n_sites}")
    elapsed = time.perf_counter() - t0
    _assert(elapsed < 60.0, f"runtime {elapsed:.1f}s >= 60s", failures)
    return not failures, f"t={elapsed:.1f}s " + "; ".join(failures)


# --------------------------------------------------------------------- 7
def check_equal_bath():
    """Identical reservoirs pin every mode at the bath occupation (1e-8)."""
    failures: list = []
    worst = 0.0
    for n_sites in (2, 4, 8, 16):
        for n_a in (0.0, 0.3, 1.0):
            model = free_fermions.boundary_driven_chain(
                n_sites, hopping=1.0, coupling=0.6, n_left=n_a, n_right=n_a)
            c, unique = free_fermions.lyapunov_steady(model)
            dev = float(np.abs(c - n_a * np.eye(n_sites)).max())
            worst = max(worst, dev)
            _assert(unique, f"L={n_sites} n_a={n_a}: steady state not unique",
                    failures)
            _assert(dev <= 1e-8, f"L={n_sites} n_a={n_a}: deviation {dev:.2e}",
                    failures)
    return not failures, f"worst deviation {worst:.2e} " + "; ".join(failures)


# --------------------------------------------------------------------- 8
def check_ballistic_transport():
    """Steady current is length independent and linear in the bias."""
    failures: list = []
    report = free_fermions.ballistic_scaling_experiment(
        coupling=0.6, hopping=1.0, n_left=1.0, n_right=0.0,
        lengths=(4, 8, 16, 32))
    _assert(report.relative_spread <= 1e-6,
            f"relative spread {report.relative_spread:.2e} > 1e-6", failures)
    _assert(float(report.profile_flatness.max()) <= 1e-9,
            f"profile flatness {report.profile_flatness.max():.2e}", failures)

    def current(nl, nr):
        m = free_fermions.boundary_driven_chain(8, 1.0, 0.6, nl, nr)
        c, _ = free_fermions.lyapunov_steady(m)
        return float(free_fermions.current_profile(c, 1.0).mean())

    j_full = current(0.9, 0.1)
    j_half = current(0.7, 0.3)
    j_same = current(0.8, 0.0)
    _assert(abs(j_full - 2 * j_half) <= 1e-8,
            f"linearity violated: {j_full:.3e} vs 2x{j_half:.3e}", failures)
    _assert(abs(j_full - j_same) <= 1e-8,
            "current depends on more than the bias n_left - n_right", failures)
    _assert(abs(current(0.5, 0.5)) <= 1e-9, "nonzero current at zero bias",
            failures)
    return not failures, (f"kappa={report.kappa:.6f} "
                          f"spread={report.relative_spread:.2e} "
                          + "; ".join(failures))


# --------------------------------------------------------------------- 9
def check_rainbow_replication():
    """Bell-pair drives replicate entanglement on every mirror pair."""
    failures: list = []
    report = free_fermions.rainbow_experiment(
        n_sites=4, hopping=1.0, coupling=0.8, bell_phase=np.pi / 3)
    _assert(report.all_above,
            f"fidelities {np.round(report.fidelities, 6)} not all > 0.99",
            failures)
    control = free_fermions.rainbow_experiment(
        n_sites=4, hopping=1.0, coupling=0.8, bell_phase=np.pi / 3,
        entangled=False)
    model = free_fermions.two_chain_bell_model(4, 1.0, 0.8, np.pi / 3,
                                               entangled=False)
    c, _ = free_fermions.lyapunov_steady(model)
    cross = float(np.abs(c[:4, 4:]).max())
    _assert(cross <= 1e-8, f"control cross correlations {cross:.2e}", failures)
    _assert(bool(np.all(np.abs(control.fidelities - 0.5) < 0.2)),
            f"control fidelities {control.fidelities} far from 1/2", failures)
    return not failures, (f"min fidelity {report.fidelities.min():.6f} "
                          f"control cross={cross:.1e} " + "; ".join(failures))


# --------------------------------------------------------------------- 10
def check_xxz_boundary_twist():
    """Twisted boundary targets sustain currents of all spin components."""
    failures: list = []
    report = experiments.xxz_ness_experiment(
        n_sites=4, hopping=1.0, anisotropy=0.5,
        left_target=(0, 0, 1), right_target=(1, 0, 0),
        gamma_left=1.0, gamma_right=1.0)
    for comp in ("x", "y", "z"):
        mx = float(np.abs(report.currents[comp]).max())
        _assert(mx > 1e-6, f"j^{comp} vanishes (max |j|={mx:.2e})", failures)
    _assert(report.flatness["z"] <= 1e-9,
            f"z current not flat: {report.flatness['z']:.2e}", failures)
    _assert(report.unique, "twisted steady state not unique", failures)
    aligned = experiments.xxz_ness_experiment(
        n_sites=4, hopping=1.0, anisotropy=0.5,
        left_target=(0, 0, 1), right_target=(0, 0, 1),
        gamma_left=1.0, gamma_right=1.0)
    worst = max(float(np.abs(aligned.currents[c]).max()) for c in ("x", "y", "z"))
    _assert(worst <= 1e-9, f"aligned control carries current {worst:.2e}",
            failures)
    return not failures, (
        f"|jz|={abs(report.currents['z'][0]):.4f} "
        f"flat z={report.flatness['z']:.1e} "
        f"x,y profile spread=({report.flatness['x']:.2e},"
        f"{report.flatness['y']:.2e}) aligned={worst:.1e} "
        + "; ".join(failures))


# --------------------------------------------------------------------- 11
def check_atom_loss():
    """One-body loss is exactly exponential; two-body loss is slower."""
    failures: list = []
    gamma = 0.7
    for n_sites in (3, 6):
        model = atom_loss.LossModel(n_sites=n_sites, hopping=1.0, loss_order=1,
                                    loss_rate=gamma)
        rho0 = atom_loss.product_state([(j + 1) % 2 for j in range(n_sites)])
        n0 = atom_loss.mean_density(rho0, n_sites)
        times = np.linspace(0.0, 3.0, 7)
        dens = atom_loss.density_trajectory(model, rho0, times)
        err = float(np.abs(dens - n0 * np.exp(-gamma * times)).max())
        _assert(err <= 1e-8, f"K=1 L={n_sites}: deviation {err:.2e}", failures)
    # K=1 decay is exponential, so the log-log curvature diagnostic fires
    ts = np.linspace(0.5, 3.0, 24)
    fit = atom_loss.decay_exponent_fit(ts, 0.5 * np.exp(-gamma * ts),
                                       (0.5, 3.0))
    _assert(fit.non_power_law, "exponential decay not flagged", failures)

    model2 = atom_loss.LossModel(n_sites=6, hopping=1.0, loss_order=2,
                                 loss_rate=0.5)
    rho0 = atom_loss.product_state([1] * 6)
    times2 = np.geomspace(0.2, 12.0, 18)
    dens2 = atom_loss.density_trajectory(model2, rho0, times2)
    _assert(bool(np.all(np.diff(dens2) < 0)),
            "K=2 density not strictly decreasing", failures)
    fit2 = atom_loss.decay_exponent_fit(times2, dens2, (0.2, 12.0))
    _assert(fit2.non_power_law,
            f"K=2 decay looks like a pure power law (curv {fit2.curvature:.3f})",
            failures)
    _assert(fit2.alpha < 0, "K=2 fitted slope not negative", failures)
    return not failures, (f"K=2 slope={fit2.alpha:.3f} curv={fit2.curvature:.3f} "
                          + "; ".join(failures))


# --------------------------------------------------------------------- 12
def check_structural_invariants():
    """Trace/positivity/Hermiticity on propagated states; gauge invariance."""
    failures: list = []
    rng = np.random.default_rng(23)
    model = experiments.thermal_qubit_model(1.0, 1.0, 1.0)
    for t in (0.1, 1.0, 10.0):
        structural_invariants(lb.propagate(
            model, ops.projector(ops.basis_state(2, 1)), t), failures, "relax")
    for dim in (2, 3, 4):
        m = lb.random_lindblad_model(dim, 2, rng)
        rho0 = ops.random_density(dim, rng)
        for method in ("exact_exp", "adaptive_rk"):
            structural_invariants(lb.propagate(m, rho0, 0.7, method=method),
                                  failures, f"{method} dim{dim}")
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = float(rng.normal())
        gauged = lb.gauge_transform(m, a, b)
        dist = float(np.abs(lb.build_superoperator(m).matrix
                            - lb.build_superoperator(gauged).matrix).max())
        _assert(dist <= 1e-10, f"gauge changed the superoperator by {dist:.2e}",
                failures)
    spec = collisions.exchange_collision_spec(0.8, 0.3, n_ancilla=0.4, omega0=1.0)
    rho = ops.projector(np.array([1.0, 1.0]) / np.sqrt(2))
    for _ in range(5):
        rho = collisions.collision_map(spec, rho)
        structural_invariants(rho, failures, "collision")
    return not failures, "; ".join(failures) or "all propagation invariants hold"


# ---------------------------------------------------------------------
# golden-file checks (regression against serialized matrices)

def _golden_path(name: str):
    from importlib import resources
    return resources.files("oqsim").joinpath("golden", name)


def _load_golden(name: str) -> np.ndarray:
    import json
    with _golden_path(name).open(encoding="utf-8") as fh:
        return ops.matrix_from_json(json.load(fh))


def check_golden_thermal_steady():
    """Stored thermal-qubit steady state is reproduced (1e-10)."""
    want = _load_golden("thermal_qubit_steady.json")
    model = experiments.thermal_qubit_model(1.0, 1.0, 1.0)
    got = lb.steady_state(model).rho
    err = float(np.abs(got - want).max())
    return err <= 1e-10, f"deviation {err:.2e}"


def check_golden_damping_superoperator():
    """Stored amplitude-damping superoperator matrix is reproduced (1e-12)."""
    want = _load_golden("amplitude_damping_superop.json")
    model = lb.LindbladModel(
        hamiltonian=0.5 * np.asarray(ops.SIGMA_Z),
        jumps=(np.sqrt(0.8) * np.asarray(ops.SIGMA_MINUS),))
    got = lb.build_superoperator(model).matrix
    err = float(np.abs(got - want).max())
    return err <= 1e-12, f"deviation {err:.2e}"


def check_golden_transport_steady():
    """Stored boundary-driven L=4 correlation matrix is reproduced (1e-10)."""
    want = _load_golden("transport_L4_steady.json")
    model = free_fermions.boundary_driven_chain(4, 1.0, 0.6, 0.9, 0.1)
    got, _ = free_fermions.lyapunov_steady(model)
    err = float(np.abs(got - want).max())
    return err <= 1e-10, f"deviation {err:.2e}"


#: (name, suites, criterion label, function)
CHECKS = (
    ("gibbs_relaxation", ("fast", "full"), "criterion 1", check_gibbs_relaxation),
    ("pauli_lindblad_consistency", ("fast", "full"), "criterion 2",
     check_pauli_lindblad_consistency),
    ("spectral_placement", ("fast", "full"), "criterion 3",
     check_spectral_placement),
    ("trajectory_unraveling", ("full",), "criterion 4",
     check_trajectory_unraveling),
    ("collision_continuum", ("fast", "full"), "criterion 5",
     check_collision_continuum),
    ("lyapunov_oracle", ("full",), "criterion 6", check_lyapunov_oracle),
    ("equal_bath", ("fast", "full"), "criterion 7", check_equal_bath),
    ("ballistic_transport", ("fast", "full"), "criterion 8",
     check_ballistic_transport),
    ("rainbow_replication", ("fast", "full"), "criterion 9",
     check_rainbow_replication),
    ("xxz_boundary_twist", ("fast", "full"), "criterion 10",
     check_xxz_boundary_twist),
    ("atom_loss", ("full",), "criterion 11", check_atom_loss),
    ("structural_invariants", ("fast", "full"), "criterion 12",
     check_structural_invariants),
    ("golden_thermal_steady", ("fast", "full"), "golden",
     check_golden_thermal_steady),
    ("golden_damping_superoperator", ("fast", "full"), "golden",
     check_golden_damping_superoperator),
    ("golden_transport_steady", ("fast", "full"), "golden",
     check_golden_transport_steady),
)


def run_suite(suite: str = "fast") -> list[CheckResult]:
    """Run all checks tagged with ``suite``; failures never abort the run."""
    if suite not in ("fast", "full"):
        raise ValueError(f"unknown suite {suite!r}")
    results = []
    for name, suites, _label, fn in CHECKS:
        if suite not in suites:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception:
            passed = False
            detail = "raised: " + traceback.format_exc(limit=2).strip()
        results.append(CheckResult(name=name, passed=bool(passed),
                                   detail=detail.strip(),
                                   seconds=time.perf_counter() - t0))
    return results
