"""Experiment drivers behind the command-line runner.

Each driver builds the model from a validated config section, runs the
relevant engine and returns an :class:`ExperimentResult` holding the main
table (written as CSV), optional extra tables and a metadata dict. The
boundary-driven XXZ steady-state experiment lives here as well since it
is a composition of engines rather than an engine of its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import atom_loss, collisions, free_fermions, weak_coupling
from . import lindblad as lb
from . import operators as ops
from .errors import SizeLimitError

#: dense solvers handle at most 2^6 spin states comfortably
XXZ_MAX_SITES = 6

PAULI_BY_NAME = {"x": ops.SIGMA_X, "y": ops.SIGMA_Y, "z": ops.SIGMA_Z}


@dataclass
class ExperimentResult:
    columns: dict
    meta: dict
    extra_tables: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# boundary-driven XXZ chain

def xxz_hamiltonian(n_sites: int, hopping: float, anisotropy: float) -> np.ndarray:
    h = np.zeros((2 ** n_sites, 2 ** n_sites), dtype=complex)
    for k in range(1, n_sites):
        for name, w in (("x", 1.0), ("y", 1.0), ("z", anisotropy)):
            pauli = PAULI_BY_NAME[name]
            h += hopping * w * (ops.site_operator(pauli, k, n_sites)
                                @ ops.site_operator(pauli, k + 1, n_sites))
    return h


def rotated_lowering(target) -> np.ndarray:
    """Lowering operator |+n><-n| toward the Bloch direction ``target``."""
    n = np.asarray(target, dtype=float)
    nrm = np.linalg.norm(n)
    if nrm == 0:
        raise ValueError("target direction must be a nonzero Bloch vector")
    n = n / nrm
    m = n[0] * ops.SIGMA_X + n[1] * ops.SIGMA_Y + n[2] * ops.SIGMA_Z
    _w, v = np.linalg.eigh(m)          # ascending: column 0 is -1, column 1 is +1
    return np.outer(v[:, 1], v[:, 0].conj())


def spin_current_operator(component: str, bond: int, n_sites: int,
                          hopping: float) -> np.ndarray:
    """Cyclic two-site current 2J (s^b_k s^c_{k+1} - s^c_k s^b_{k+1}).

    Only the z component obeys a continuity equation for anisotropic
    chains, so only its profile is guaranteed flat in a steady state;
    the x and y profiles are reported as diagnostics.
    """
    order = {"x": ("y", "z"), "y": ("z", "x"), "z": ("x", "y")}[component]
    a = ops.site_operator(PAULI_BY_NAME[order[0]], bond, n_sites) \
        @ ops.site_operator(PAULI_BY_NAME[order[1]], bond + 1, n_sites)
    b = ops.site_operator(PAULI_BY_NAME[order[1]], bond, n_sites) \
        @ ops.site_operator(PAULI_BY_NAME[order[0]], bond + 1, n_sites)
    return 2.0 * hopping * (a - b)


@dataclass(frozen=True)
class XXZReport:
    """Per-bond spin currents of the driven-chain steady state."""

    bonds: np.ndarray
    currents: dict                  # component -> per-bond array
    flatness: dict                  # component -> max spread over bonds
    magnetization: np.ndarray       # <sigma^z_j>
    unique: bool
    gap: float


def xxz_ness_experiment(n_sites: int, hopping: float, anisotropy: float,
                        left_target=(0, 0, 1), right_target=(1, 0, 0),
                        gamma_left: float = 1.0,
                        gamma_right: float = 1.0) -> XXZReport:
    """Steady state of the anisotropic chain with polarizing boundary drives.

    Each boundary spin is relaxed toward its own Bloch direction by a
    lowering operator in the rotated frame. Twisted targets support
    stationary currents of all three spin components.
    """
    if n_sites > XXZ_MAX_SITES:
        raise SizeLimitError(
            f"{n_sites} sites exceed the dense steady-state limit {XXZ_MAX_SITES}")
    h = xxz_hamiltonian(n_sites, hopping, anisotropy)
    jumps = (
        np.sqrt(gamma_left) * ops.site_operator(rotated_lowering(left_target), 1, n_sites),
        np.sqrt(gamma_right) * ops.site_operator(rotated_lowering(right_target),
                                                 n_sites, n_sites),
    )
    model = lb.LindbladModel(hamiltonian=h, jumps=jumps)
    result = lb.steady_state(model)
    rho = result.rho
    bonds = np.arange(1, n_sites)
    currents, flatness = {}, {}
    for comp in ("x", "y", "z"):
        vals = np.array([
            float(np.real(np.trace(
                spin_current_operator(comp, int(k), n_sites, hopping) @ rho)))
            for k in bonds])
        currents[comp] = vals
        flatness[comp] = float(vals.max() - vals.min()) if vals.size else 0.0
    mag = np.array([
        float(np.real(np.trace(ops.site_operator(ops.SIGMA_Z, j, n_sites) @ rho)))
        for j in range(1, n_sites + 1)])
    return XXZReport(bonds=bonds, currents=currents, flatness=flatness,
                     magnetization=mag, unique=result.unique, gap=result.gap)


# ---------------------------------------------------------------------------
# config-driven drivers


def _time_grid(params: dict, default_stop: float) -> np.ndarray:
    t = params.get("times", {})
    start = float(t.get("start", 0.0))
    stop = float(t.get("stop", default_stop))
    num = int(t.get("num", 101))
    if t.get("spacing", "linear") == "log":
        if start <= 0:
            raise ValueError("log-spaced grids need start > 0")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


def _qubit_rho0(name: str) -> np.ndarray:
    states = {
        "excited": ops.projector(ops.basis_state(2, 1)),
        "ground": ops.projector(ops.basis_state(2, 0)),
        "mixed": np.eye(2, dtype=complex) / 2,
        "plus": ops.projector(np.array([1.0, 1.0]) / np.sqrt(2)),
    }
    if name not in states:
        raise ValueError(f"unknown initial state {name!r}")
    return states[name]


def qubit_hamiltonian(omega0: float) -> np.ndarray:
    """Two-level Hamiltonian diag(0, omega0): |1> sits omega0 above |0>."""
    return np.diag([0.0, omega0]).astype(complex)


def thermal_qubit_model(omega0: float, gamma_down: float,
                        beta: float) -> lb.LindbladModel:
    """Secular model of a two-level system in a detailed-balance bath."""
    couplings = weak_coupling.CouplingSet(operators=(ops.SIGMA_X,))
    bath = weak_coupling.thermal_qubit_bath(omega0, gamma_down, beta)
    return weak_coupling.secular_model(qubit_hamiltonian(omega0), couplings, bath)


def run_relax(model_cfg: dict, params: dict, _tols: dict) -> ExperimentResult:
    omega0 = float(model_cfg["omega0"])
    gamma_down = float(model_cfg["gamma_down"])
    beta = float(model_cfg["beta"])
    model = thermal_qubit_model(omega0, gamma_down, beta)
    rho0 = _qubit_rho0(params.get("rho0", "excited"))
    times = _time_grid(params, default_stop=50.0 / gamma_down)
    states = lb.propagate_series(model, rho0, times)
    p0 = np.array([float(np.real(r[0, 0])) for r in states])
    p1 = np.array([float(np.real(r[1, 1])) for r in states])
    coh = np.array([float(np.abs(r[0, 1])) for r in states])
    z = 1.0 + np.exp(-beta * omega0)
    meta = {
        "boltzmann_p0": 1.0 / z,
        "boltzmann_p1": float(np.exp(-beta * omega0) / z),
        "final_error": float(max(abs(p0[-1] - 1.0 / z),
                                 abs(p1[-1] - np.exp(-beta * omega0) / z))),
    }
    return ExperimentResult(
        columns={"t": times, "p0": p0, "p1": p1, "coherence_abs": coh},
        meta=meta)


def _model_from_config(model_cfg: dict) -> lb.LindbladModel:
    kind = model_cfg["type"]
    if kind == "thermal_qubit":
        return thermal_qubit_model(float(model_cfg["omega0"]),
                                   float(model_cfg["gamma_down"]),
                                   float(model_cfg["beta"]))
    if kind == "amplitude_damping":
        h = 0.5 * float(model_cfg["omega0"]) * np.asarray(ops.SIGMA_Z)
        return lb.LindbladModel(
            hamiltonian=h,
            jumps=(np.sqrt(float(model_cfg["gamma"])) * np.asarray(ops.SIGMA_MINUS),))
    if kind == "explicit":
        h = ops.matrix_from_json(model_cfg["hamiltonian"])
        jumps = tuple(ops.matrix_from_json(j) for j in model_cfg.get("jumps", []))
        return lb.LindbladModel(hamiltonian=h, jumps=jumps)
    raise ValueError(f"unknown model type {kind!r}")


def run_spectrum(model_cfg: dict, _params: dict, _tols: dict) -> ExperimentResult:
    model = _model_from_config(model_cfg)
    spec = np.sort_complex(lb.liouvillian_spectrum(model))
    steady = lb.steady_state(model)
    comm = lb.commutant_uniqueness_test(model)
    meta = {
        "gap": steady.gap,
        "unique": steady.unique,
        "null_dim": steady.null_dim,
        "irreducible": comm.irreducible,
        "steady_residual": steady.residual,
    }
    return ExperimentResult(
        columns={"re": spec.real, "im": spec.imag}, meta=meta)


def run_pauli(model_cfg: dict, params: dict, _tols: dict) -> ExperimentResult:
    omega0 = float(model_cfg["omega0"])
    gamma_down = float(model_cfg["gamma_down"])
    beta = float(model_cfg["beta"])
    h_s = qubit_hamiltonian(omega0)
    couplings = weak_coupling.CouplingSet(operators=(ops.SIGMA_X,))
    bath = weak_coupling.thermal_qubit_bath(omega0, gamma_down, beta)
    spectrum = weak_coupling.bohr_decompose(h_s, couplings)
    pauli = weak_coupling.extract_pauli_model(spectrum, bath, h_s)
    times = _time_grid(params, default_stop=20.0 / gamma_down)
    p0 = np.asarray(params.get("p0", [0.0, 1.0]), dtype=float)
    traj = np.array([weak_coupling.evolve_pauli(pauli, p0, float(t)) for t in times])
    cols = {"t": times}
    for level in range(traj.shape[1]):
        cols[f"p{level}"] = traj[:, level]
    meta = {
        "stationary": weak_coupling.stationary_populations(pauli).tolist(),
        "rates": pauli.rates.tolist(),
    }
    return ExperimentResult(columns=cols, meta=meta)


def run_collision_converge(model_cfg: dict, params: dict,
                           _tols: dict) -> ExperimentResult:
    g = float(model_cfg["g"])
    tau0 = float(model_cfg["tau0"])
    n_anc = float(model_cfg.get("n_ancilla", 0.0))
    omega0 = float(model_cfg.get("omega0", 0.0))
    base = collisions.exchange_collision_spec(g, tau0, n_anc, omega0)
    ref = collisions.exchange_lindblad_reference(g, tau0, n_anc, omega0)
    taus = np.asarray(params.get("tau_factors", [0.2, 0.1, 0.05, 0.025]),
                      dtype=float) * tau0
    t_final = float(params.get("t_final", 1.0))
    rho0 = _qubit_rho0(params.get("rho0", "excited"))
    scaled = bool(params.get("scaled", True))
    if scaled:
        report = collisions.continuum_limit_check(base, ref, taus, t_final, rho0)
    else:
        unitary_ref = lb.LindbladModel(hamiltonian=ref.hamiltonian, jumps=())
        report = collisions.continuum_limit_check(base, unitary_ref, taus, t_final,
                                                  rho0, scale_interaction=False)
    order = np.full(report.taus.size, report.fitted_order)
    return ExperimentResult(
        columns={"tau": report.taus, "trace_distance": report.distances,
                 "fitted_order": order},
        meta={"fitted_order": report.fitted_order, "scaled": scaled})


def run_transport(model_cfg: dict, params: dict, _tols: dict) -> ExperimentResult:
    n_sites = int(model_cfg["L"])
    hopping = float(model_cfg["J"])
    g = float(model_cfg["g"])
    n_left = float(model_cfg["n_left"])
    n_right = float(model_cfg["n_right"])
    model = free_fermions.boundary_driven_chain(n_sites, hopping, g, n_left, n_right)
    c, unique = free_fermions.lyapunov_steady(model)
    occ = free_fermions.occupations(c)
    prof = free_fermions.current_profile(c, hopping)
    currents = np.concatenate([prof, [np.nan]])  # no bond after the last site
    meta = {
        "unique": unique,
        "mean_current": float(prof.mean()) if prof.size else 0.0,
        "profile_flatness": float(prof.max() - prof.min()) if prof.size else 0.0,
    }
    extra = {}
    lengths = params.get("lengths")
    if lengths:
        rep = free_fermions.ballistic_scaling_experiment(
            g, hopping, n_left, n_right, lengths)
        extra["scaling"] = {"L": rep.lengths.astype(float),
                            "current": rep.currents}
        meta["kappa"] = rep.kappa
        meta["relative_spread"] = rep.relative_spread
    return ExperimentResult(
        columns={"index": np.arange(1, n_sites + 1, dtype=float),
                 "occupation": occ, "current": currents},
        meta=meta, extra_tables=extra)


def run_rainbow(model_cfg: dict, params: dict, _tols: dict) -> ExperimentResult:
    report = free_fermions.rainbow_experiment(
        n_sites=int(model_cfg["L"]), hopping=float(model_cfg["J"]),
        coupling=float(model_cfg["g"]), bell_phase=float(model_cfg["bell_phase"]),
        mode=params.get("mode", "steady"),
        n_collisions=int(params.get("n_collisions", 0)),
        tau=float(params.get("tau", 0.1)),
        entangled=bool(model_cfg.get("entangled", True)),
        threshold=float(params.get("threshold", 0.99)))
    pairs = np.arange(1, report.fidelities.size + 1, dtype=float)
    meta = {
        "all_above_threshold": report.all_above,
        "threshold": report.threshold,
        "max_off_pair_correlation": report.max_off_pair_correlation,
        "mode": report.mode,
    }
    return ExperimentResult(
        columns={"pair": pairs, "fidelity": report.fidelities},
        meta=meta)


def _loss_rho0(spec, n_sites: int) -> np.ndarray:
    if spec == "full":
        return atom_loss.product_state([1] * n_sites)
    if spec == "half":
        return atom_loss.product_state([(j + 1) % 2 for j in range(n_sites)])
    return atom_loss.product_state(list(spec))


def run_loss(model_cfg: dict, params: dict, _tols: dict) -> ExperimentResult:
    model = atom_loss.LossModel(
        n_sites=int(model_cfg["L"]), hopping=float(model_cfg["J"]),
        loss_order=int(model_cfg["K"]), loss_rate=float(model_cfg["Gamma"]),
        boundary=model_cfg.get("boundary", "open"),
        trap_strength=float(model_cfg.get("trap", 0.0)))
    rho0 = _loss_rho0(params.get("rho0", "full"), model.n_sites)
    times = _time_grid(params, default_stop=5.0 / max(model.loss_rate, 1e-6))
    lind = atom_loss.build_loss_lindblad(model)
    method = "exact_exp" if model.n_sites <= 4 else "adaptive_rk"
    states = lb.propagate_series(lind, rho0, times, method=method,
                                 rtol=1e-11, atol=1e-13)
    dens = np.array([atom_loss.mean_density(r, model.n_sites) for r in states])
    krows, kcols, nkvals, trows = [], [], [], []
    for t, state in zip(times, states):
        ks, nk = atom_loss.momentum_occupation(model, state)
        trows.extend([t] * ks.size)
        krows.extend(ks.tolist())
        nkvals.extend(nk.tolist())
    ks0, nk0 = atom_loss.momentum_occupation(model, rho0)
    meta = {
        "first_fourier_mode_abs": float(abs(atom_loss.first_fourier_mode(ks0, nk0))),
        "monotone_decreasing": bool(np.all(np.diff(dens) <= 1e-10)),
    }
    window = params.get("fit_window")
    if window:
        fit = atom_loss.decay_exponent_fit(times, dens, (float(window[0]),
                                                         float(window[1])))
        meta["fit"] = {"alpha": fit.alpha, "stderr": fit.stderr,
                       "curvature": fit.curvature,
                       "non_power_law": fit.non_power_law}
    return ExperimentResult(
        columns={"t": times, "n": dens},
        meta=meta,
        extra_tables={"nk": {"t": np.asarray(trows), "k": np.asarray(krows),
                             "nk": np.asarray(nkvals)}})


def run_xxz_ness(model_cfg: dict, _params: dict, _tols: dict) -> ExperimentResult:
    report = xxz_ness_experiment(
        n_sites=int(model_cfg["L"]), hopping=float(model_cfg["J"]),
        anisotropy=float(model_cfg["Delta"]),
        left_target=tuple(model_cfg.get("left_target", (0, 0, 1))),
        right_target=tuple(model_cfg.get("right_target", (1, 0, 0))),
        gamma_left=float(model_cfg.get("gamma_left", 1.0)),
        gamma_right=float(model_cfg.get("gamma_right", 1.0)))
    meta = {
        "flatness": report.flatness,
        "unique": report.unique,
        "gap": report.gap,
        "magnetization_z": report.magnetization.tolist(),
    }
    return ExperimentResult(
        columns={"bond": report.bonds.astype(float),
                 "jx": report.currents["x"],
                 "jy": report.currents["y"],
                 "jz": report.currents["z"]},
        meta=meta)


DRIVERS = {
    "relax": run_relax,
    "spectrum": run_spectrum,
    "pauli": run_pauli,
    "collision_converge": run_collision_converge,
    "transport": run_transport,
    "rainbow": run_rainbow,
    "loss": run_loss,
    "xxz_ness": run_xxz_ness,
}
