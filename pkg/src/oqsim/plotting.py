"""Figure rendering for the experiment runner.

Each experiment's tabular output has a natural picture; the runner saves
it as PNG next to the CSV unless plotting is disabled. The CSV stays the
canonical artifact, figures are for eyeballs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_relax(cols, meta, path):
    fig, ax = _new_axes("t", "population", "relaxation to the Gibbs state")
    ax.plot(cols["t"], cols["p0"], label="p0")
    ax.plot(cols["t"], cols["p1"], label="p1")
    ax.plot(cols["t"], cols["coherence_abs"], label="|coherence|", ls="--")
    if "boltzmann_p1" in meta:
        ax.axhline(meta["boltzmann_p1"], color="k", lw=0.8, ls=":",
                   label="Boltzmann")
    ax.legend()
    _save(fig, path)


def plot_spectrum(cols, meta, path):
    fig, ax = _new_axes("Re", "Im", "generator spectrum")
    ax.scatter(cols["re"], cols["im"], s=18)
    ax.axvline(0.0, color="k", lw=0.8)
    if meta.get("gap") is not None:
        ax.axvline(-meta["gap"], color="r", lw=0.8, ls=":", label="gap")
        ax.legend()
    _save(fig, path)


def plot_pauli(cols, _meta, path):
    fig, ax = _new_axes("t", "population", "rate-equation populations")
    for name, values in cols.items():
        if name != "t":
            ax.plot(cols["t"], values, label=name)
    ax.legend()
    _save(fig, path)


def plot_collision_converge(cols, meta, path):
    fig, ax = _new_axes("tau", "trace distance", "collision continuum limit")
    ax.loglog(cols["tau"], cols["trace_distance"], "o-")
    order = meta.get("fitted_order")
    if order is not None and np.isfinite(order):
        ax.set_title(f"collision continuum limit (order {order:.2f})")
    _save(fig, path)


def plot_transport(cols, _meta, path):
    fig, ax = _new_axes("site / bond", "occupation", "boundary-driven chain")
    ax.plot(cols["index"], cols["occupation"], "o-", label="occupation")
    ax2 = ax.twinx()
    mask = np.isfinite(cols["current"])
    ax2.plot(cols["index"][mask], cols["current"][mask], "s--", color="C3",
             label="current")
    ax2.set_ylabel("bond current")
    ax.legend(loc="upper left")
    ax2.legend(loc="upper right")
    _save(fig, path)


def plot_rainbow(cols, meta, path):
    fig, ax = _new_axes("mirror pair", "Bell fidelity", "entanglement replication")
    ax.bar(cols["pair"], cols["fidelity"], width=0.6)
    ax.axhline(meta.get("threshold", 0.99), color="k", lw=0.8, ls=":")
    ax.set_ylim(0, 1.05)
    _save(fig, path)


def plot_loss(cols, meta, path):
    fig, ax = _new_axes("t", "mean density", "lossy lattice gas")
    t, n = cols["t"], cols["n"]
    positive = (t > 0) & (n > 0)
    if positive.sum() >= 2:
        ax.loglog(t[positive], n[positive], "o-")
    else:
        ax.plot(t, n, "o-")
    fit = meta.get("fit")
    if fit:
        ax.set_title(f"lossy lattice gas (slope {fit['alpha']:.2f})")
    _save(fig, path)


def plot_xxz_ness(cols, _meta, path):
    fig, ax = _new_axes("bond", "spin current", "boundary-twisted chain currents")
    for comp in ("jx", "jy", "jz"):
        ax.plot(cols["bond"], cols[comp], "o-", label=comp)
    ax.legend()
    _save(fig, path)


PLOTTERS = {
    "relax": plot_relax,
    "spectrum": plot_spectrum,
    "pauli": plot_pauli,
    "collision_converge": plot_collision_converge,
    "transport": plot_transport,
    "rainbow": plot_rainbow,
    "loss": plot_loss,
    "xxz_ness": plot_xxz_ness,
}


def render(experiment: str, cols, meta, path) -> None:
    PLOTTERS[experiment](cols, meta, path)
