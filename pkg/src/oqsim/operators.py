"""Dense complex operator algebra for small quantum systems.

Operators and states are plain complex numpy arrays. The basis convention
for a single spin/mode is ``|0> = (1, 0)`` (ground / empty, sigma_z
eigenvalue +1) and ``|1> = (0, 1)`` (excited / occupied), so the lowering
operator is ``SIGMA_MINUS = |0><1|``.

All functions are pure: inputs are never mutated and results are freshly
allocated, so everything here is safe to call concurrently.
"""

from __future__ import annotations

import json
from functools import reduce

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericError, PositivityError

# maximum Hilbert-space dimension a tensor product may produce
MAX_DIM = 2 ** 14

# construction tolerances
HERM_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_TOL = 1e-10


def _frozen(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    a.setflags(write=False)
    return a


IDENTITY_2 = _frozen([[1, 0], [0, 1]])
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])
SIGMA_MINUS = _frozen([[0, 1], [0, 0]])   # |0><1|
SIGMA_PLUS = _frozen([[0, 0], [1, 0]])    # |1><0|


def as_square(m) -> np.ndarray:
    """Coerce to a complex square matrix, validating the shape."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_defect(m) -> float:
    """Largest elementwise deviation of ``m`` from its adjoint."""
    a = as_square(m)
    return float(np.abs(a - a.conj().T).max())


def hermitian_part(m) -> np.ndarray:
    a = as_square(m)
    return (a + a.conj().T) / 2


def hermitize(m, tol: float = HERM_TOL) -> np.ndarray:
    """Symmetrize ``m`` to (M + M^dag)/2, requiring the defect to be small.

    The tolerance is relative to the largest entry magnitude, so rescaling
    an operator does not change whether it passes.
    """
    a = as_square(m)
    scale = max(float(np.abs(a).max()), 1.0)
    if hermiticity_defect(a) > tol * scale:
        raise NumericError(
            f"matrix is not Hermitian within {tol} (relative defect "
            f"{hermiticity_defect(a) / scale:.3e})")
    return hermitian_part(a)


def check_density(rho, trace_tol: float = TRACE_TOL,
                  eig_tol: float = EIG_TOL) -> np.ndarray:
    """Validate a density matrix and return its symmetrized copy.

    Checks Hermiticity, unit trace and positivity (smallest eigenvalue
    above ``-eig_tol``).
    """
    r = hermitize(rho)
    tr = float(np.trace(r).real)
    if abs(tr - 1.0) > trace_tol:
        raise NumericError(f"density matrix trace {tr} deviates from 1")
    wmin = float(np.linalg.eigvalsh(r).min())
    if wmin < -eig_tol:
        raise PositivityError(f"density matrix has eigenvalue {wmin:.3e}")
    return r


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more operators, left to right."""
    mats = [as_square(o) for o in ops]
    if not mats:
        raise DimensionError("tensor() needs at least one operator")
    dim = 1
    for m in mats:
        dim *= m.shape[0]
    if dim > MAX_DIM:
        raise DimensionError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    return reduce(np.kron, mats)


def partial_trace(m, dims: tuple[int, int], keep: str = "A") -> np.ndarray:
    """Trace out one factor of a bipartite operator on H_A (x) H_B.

    Parameters
    ----------
    m : array, shape (dA*dB, dA*dB)
    dims : (dA, dB)
    keep : "A" to trace out B, "B" to trace out A.
    """
    a = as_square(m)
    dA, dB = dims
    if dA * dB != a.shape[0]:
        raise DimensionError(f"dims {dims} incompatible with shape {a.shape}")
    r = a.reshape(dA, dB, dA, dB)
    if keep == "A":
        return np.einsum("abcb->ac", r)
    if keep == "B":
        return np.einsum("abad->bd", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def _is_normal(a: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(float(np.abs(a).max()), 1.0) ** 2
    return float(np.abs(a @ a.conj().T - a.conj().T @ a).max()) <= tol * scale


def matrix_exp(m, t: float = 1.0) -> np.ndarray:
    """exp(t*M) for a dense complex matrix.

    Hermitian and normal matrices go through an eigendecomposition
    (unitary, hence well conditioned); everything else falls back to
    scaling-and-squaring, which is what non-normal Liouvillians need.
    """
    a = as_square(m)
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix_exp: input has non-finite entries")
    scale = max(float(np.abs(a).max()), 1.0)
    if hermiticity_defect(a) <= HERM_TOL * scale:
        w, v = np.linalg.eigh(hermitian_part(a))
        return (v * np.exp(t * w)) @ v.conj().T
    if _is_normal(a):
        tmat, z = scipy.linalg.schur(a, output="complex")
        return (z * np.exp(t * np.diag(tmat))) @ z.conj().T
    return scipy.linalg.expm(t * a)


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and column eigenvectors of a Hermitian matrix."""
    a = hermitize(m)
    return np.linalg.eigh(a)


def basis_state(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    return np.outer(v, v.conj())


def site_operator(op, site: int, n_sites: int) -> np.ndarray:
    """Embed a single-site operator at ``site`` (1-based) of a chain."""
    if not 1 <= site <= n_sites:
        raise DimensionError(f"site {site} outside 1..{n_sites}")
    o = as_square(op)
    d = o.shape[0]
    left = np.eye(d ** (site - 1), dtype=complex)
    right = np.eye(d ** (n_sites - site), dtype=complex)
    return tensor(left, o, right)


def jordan_wigner_lowering(n_sites: int, site: int) -> np.ndarray:
    """Fermionic annihilation operator c_site on a spin chain (1-based).

    c_j = (prod_{l<j} sigma^z_l) sigma^-_j, which satisfies the canonical
    anticommutation relations together with its adjoints.
    """
    if not 1 <= site <= n_sites:
        raise DimensionError(f"site {site} outside 1..{n_sites}")
    ops = [SIGMA_Z] * (site - 1) + [SIGMA_MINUS] + [IDENTITY_2] * (n_sites - site)
    return tensor(*ops)


def jordan_wigner_all(n_sites: int) -> list[np.ndarray]:
    """All annihilation operators c_1..c_L of an L-site chain."""
    return [jordan_wigner_lowering(n_sites, j) for j in range(1, n_sites + 1)]


def expectation(rho, op) -> complex:
    return complex(np.trace(as_square(op) @ as_square(rho)))


def trace_distance(a, b) -> float:
    """(1/2) * trace norm of (a - b) for Hermitian a, b."""
    d = hermitian_part(as_square(a) - as_square(b))
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def state_fidelity(rho, psi) -> float:
    """Fidelity <psi|rho|psi> of a state against a pure target."""
    v = np.asarray(psi, dtype=complex).ravel()
    return float(np.real(v.conj() @ as_square(rho) @ v))


def gibbs_state(hamiltonian, beta: float) -> np.ndarray:
    """Thermal state exp(-beta H)/Z, computed stably via eigenvalues."""
    w, v = eig_hermitian(hamiltonian)
    x = np.exp(-beta * (w - w.min()))
    return (v * (x / x.sum())) @ v.conj().T


def random_hermitian(dim: int, rng: np.random.Generator,
                     scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * hermitian_part(a)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    r = a @ a.conj().T
    return r / np.trace(r).real


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def matrix_to_json(m) -> dict:
    """Serialize to the {dim, re, im} wire format (row-major lists)."""
    a = as_square(m)
    return {
        "dim": int(a.shape[0]),
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def matrix_from_json(d: dict) -> np.ndarray:
    dim = int(d["dim"])
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d["im"], dtype=float)
    if re.size != dim * dim or im.size != dim * dim:
        raise DimensionError(
            f"matrix payload length {re.size}/{im.size} does not match dim {dim}")
    return (re + 1j * im).reshape(dim, dim)


def save_matrix(path, m) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(m), fh)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh))
