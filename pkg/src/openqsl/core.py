"""Dense matrix primitives, density matrices, partial trace and seeded sampling.

Operators are plain ``numpy`` complex arrays with explicit shapes; every public
function checks shapes instead of relying on broadcasting. Density matrices
are wrapped in :class:`DensityMatrix`, which is only constructed through
:func:`validate_density` and holds a read-only copy of its data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import bisect

from .errors import DimensionMismatch, NotHermitian, NotPositive, TraceNotOne

ComplexMatrix = np.ndarray
Seed = Union[int, np.random.Generator]

DEFAULT_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_- lowers the sigma_z = +1 state |0> to |1>
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix.

    Attributes:
        matrix: read-only ``(N, N)`` complex array.
        tol: tolerance the invariants were checked at.
    """

    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, tol={self.tol:g})"


def as_matrix(x) -> np.ndarray:
    """Return the underlying square complex array of a matrix-like input."""
    m = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_shape(a, b)
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def purity(rho) -> float:
    """Tr(rho^2) for a Hermitian ``rho``."""
    m = as_matrix(rho)
    return float(np.vdot(m, m).real)


def validate_density(m, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity; return a :class:`DensityMatrix`.

    Raises:
        NotHermitian, TraceNotOne, NotPositive: with the measured violation.
    """
    m = as_matrix(m)
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > tol:
        raise NotHermitian(herm)
    trace_err = abs(np.trace(m) - 1.0)
    if trace_err > tol:
        raise TraceNotOne(trace_err)
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if min_eig < -tol:
        raise NotPositive(-min_eig)
    data = np.array(m, dtype=complex, copy=True)
    data.setflags(write=False)
    return DensityMatrix(data, tol)


def density(m, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Shorthand for :func:`validate_density` accepting an existing DensityMatrix."""
    if isinstance(m, DensityMatrix):
        return m
    return validate_density(m, tol)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


def maximally_mixed(dim: int) -> DensityMatrix:
    return validate_density(np.eye(dim, dtype=complex) / dim)


def bloch_state(r) -> DensityMatrix:
    """Qubit state 1/2 (I + r . sigma)."""
    rx, ry, rz = (float(c) for c in r)
    m = 0.5 * (np.eye(2) + rx * PAULI_X + ry * PAULI_Y + rz * PAULI_Z)
    return validate_density(m)


def bloch_vector(rho) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape != (2, 2):
        raise DimensionMismatch("Bloch vector is defined for qubits only")
    return np.array([np.trace(m @ p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)])


def partial_trace_array(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace on raw arrays; accepts a leading batch axis."""
    d_a, d_b = dims
    n = rho.shape[-1]
    if d_a * d_b != n:
        raise DimensionMismatch(f"dims {dims} do not factor dimension {n}")
    t = rho.reshape(rho.shape[:-2] + (d_a, d_b, d_a, d_b))
    if keep == 0:
        return np.trace(t, axis1=-3, axis2=-1)
    if keep == 1:
        return np.trace(t, axis1=-4, axis2=-2)
    raise ValueError(f"keep must be 0 (A) or 1 (B), got {keep!r}")


def partial_trace(rho_ab, dims: tuple[int, int], keep: int | str = 0) -> DensityMatrix:
    """Reduced state of subsystem ``keep`` (0/'A' or 1/'B') of a bipartite state."""
    if isinstance(keep, str):
        keep = {"A": 0, "B": 1}[keep.upper()]
    tol = rho_ab.tol if isinstance(rho_ab, DensityMatrix) else DEFAULT_TOL
    reduced = partial_trace_array(as_matrix(rho_ab), dims, keep)
    return validate_density(reduced, tol)


def tensor(a, b) -> DensityMatrix:
    return validate_density(np.kron(as_matrix(a), as_matrix(b)))


def split_seed(base_seed: int, index: int) -> int:
    """Seed for the ``index``-th parallel task: ``base_seed + index``."""
    return int(base_seed) + int(index)


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


def random_density(dim: int, purity_target: float | None = None, seed: Seed = 0) -> DensityMatrix:
    """Random mixed state.

    Without a target the state is drawn from the Hilbert-Schmidt ensemble
    ``G G^dagger / Tr(G G^dagger)``. With a target, a random pure state built
    from the first column of ``G`` is mixed with ``I/N`` and the mixing weight
    found by bisection, which reaches every purity in ``[1/N, 1]``.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    if purity_target is None:
        m = g @ g.conj().T
        return validate_density(m / np.trace(m).real)

    lo = 1.0 / dim
    if not (lo - 1e-12 <= purity_target <= 1.0 + 1e-12):
        raise ValueError(f"purity {purity_target} unreachable for dim {dim}; range [{lo}, 1]")
    psi = g[:, 0] / np.linalg.norm(g[:, 0])
    pure = projector(psi)
    mixed = np.eye(dim) / dim

    def excess(w: float) -> float:
        return purity(w * pure + (1 - w) * mixed) - purity_target

    if excess(1.0) <= 0:
        w = 1.0
    elif excess(0.0) >= 0:
        w = 0.0
    else:
        w = bisect(excess, 0.0, 1.0, xtol=1e-15, maxiter=200)
    m = w * pure + (1 - w) * mixed
    return validate_density(0.5 * (m + m.conj().T))


def random_hamiltonian(dim: int, diagonal_only: bool = False, seed: Seed = 0) -> np.ndarray:
    """Random Hermitian matrix.

    ``diagonal_only`` draws i.i.d. uniform entries on [0, 2pi]; otherwise a
    GUE-style ``(A + A^dagger)/2`` with standard complex Gaussian ``A``.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    if diagonal_only:
        return np.diag(rng.uniform(0.0, 2 * np.pi, dim)).astype(complex)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)
