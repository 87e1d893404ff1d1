"""Markovian open quantum systems: construction, propagation, unraveling.

The package builds Lindblad generators both microscopically (weak
coupling, secular approximation, Lamb shift) and abstractly, analyzes
them (steady states, spectra, uniqueness), unravels them with quantum
trajectories and collision models, and solves the free-fermion
correlation-matrix reduction for boundary-driven transport, entanglement
replication and atom-loss experiments.
"""

__version__ = "0.1.0"

from .lindblad import (LindbladModel, KrausMap, Superoperator,
                       apply_generator, apply_kraus, build_superoperator,
                       commutant_uniqueness_test, dual_generator,
                       effective_hamiltonian, gauge_transform,
                       liouvillian_spectrum, propagate, propagate_series,
                       run_trajectories, steady_state)
from .weak_coupling import (BathSpectralFunction, BohrSpectrum, CouplingSet,
                            PauliMasterModel, bohr_decompose,
                            build_secular_lindblad, check_detailed_balance,
                            evolve_pauli, extract_pauli_model, secular_model)
from .collisions import (CollisionSpec, collision_map, continuum_limit_check,
                         extract_kraus, stroboscopic_evolve)
from .free_fermions import (LyapunovModel, ballistic_scaling_experiment,
                            bond_current, boundary_driven_chain,
                            evolve_correlations, lyapunov_rhs, lyapunov_steady,
                            rainbow_experiment)
from .atom_loss import (LossModel, build_loss_lindblad, decay_exponent_fit,
                        density_trajectory, momentum_occupation)
from .experiments import xxz_ness_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
