"""State distances and instantaneous speeds.

Three distances are provided between density matrices:

* ``distance_d`` -- angle between the normalized states ``P = rho/sqrt(Tr rho^2)``
  on the Hilbert-Schmidt unit sphere, ``arccos <P_rho, P_sigma>``.
* ``distance_e`` -- Euclidean (Hilbert-Schmidt) distance ``sqrt(Tr (rho - sigma)^2)``.
* ``distance_phi`` -- ``sqrt(2) arccos sqrt(<P_rho, P_sigma>)``.

Speeds are the matching line elements: ``speed_d`` is the rate of change of
the angle and ``speed_e`` the Hilbert-Schmidt norm of ``rho_dot``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import _check_same_shape, as_matrix, purity
from .errors import ArccosDomainError, NotHermitian, TraceNotOne

CLAMP_WINDOW = 1e-10
DERIVATIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class NormalizedState:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpeedSample:
    time: float
    v_d: float
    v_e: float


def safe_arccos(x: float) -> float:
    """arccos with overshoot up to ``CLAMP_WINDOW`` clamped; beyond that, an error."""
    if x > 1.0 + CLAMP_WINDOW or x < -1.0 - CLAMP_WINDOW:
        raise ArccosDomainError(x)
    return float(np.arccos(min(1.0, max(-1.0, x))))


def normalize(rho) -> NormalizedState:
    m = as_matrix(rho)
    p = m / np.sqrt(purity(m))
    p.setflags(write=False)
    return NormalizedState(p)


def _pair(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same_shape(a, b)
    return a, b


def fidelity_gm(rho, sigma) -> float:
    """Tr(rho sigma) / (sqrt(Tr rho^2) sqrt(Tr sigma^2))."""
    a, b = _pair(rho, sigma)
    return float(np.vdot(a, b).real / np.sqrt(purity(a) * purity(b)))


def distance_d(rho, sigma) -> float:
    """arccos of the normalized overlap, in [0, pi/2].

    The angle is evaluated as ``2 atan2(|P - Q|, |P + Q|)``, which equals
    ``arccos <P, Q>`` for unit vectors but stays accurate for nearby states.
    """
    a, b = _pair(rho, sigma)
    f = fidelity_gm(a, b)
    if f > 1.0 + CLAMP_WINDOW or f < -1.0 - CLAMP_WINDOW:
        raise ArccosDomainError(f)
    p = a / np.sqrt(purity(a))
    q = b / np.sqrt(purity(b))
    return float(2.0 * np.arctan2(np.linalg.norm(p - q), np.linalg.norm(p + q)))


def distance_e(rho, sigma) -> float:
    a, b = _pair(rho, sigma)
    return float(np.linalg.norm(a - b))


def distance_phi(rho, sigma) -> float:
    """sqrt(2) * arccos(sqrt(<P_rho, P_sigma>))."""
    f = fidelity_gm(rho, sigma)
    if f < -CLAMP_WINDOW:
        raise ArccosDomainError(f)
    return float(np.sqrt(2.0) * safe_arccos(np.sqrt(max(f, 0.0))))


def _check_derivative(rho_dot: np.ndarray) -> None:
    herm = float(np.max(np.abs(rho_dot - np.swapaxes(rho_dot.conj(), -1, -2)), initial=0.0))
    if herm > DERIVATIVE_TOL:
        raise NotHermitian(herm, f"NotHermitian: rho_dot violates hermiticity by {herm:.3e}")
    tr = float(np.max(np.abs(np.trace(rho_dot, axis1=-2, axis2=-1)), initial=0.0))
    if tr > DERIVATIVE_TOL:
        raise TraceNotOne(tr, f"rho_dot is not traceless (|Tr| = {tr:.3e}); generator does not preserve trace")


def speeds_d(rho: np.ndarray, rho_dot: np.ndarray) -> np.ndarray:
    """Vectorized :func:`speed_d` over a leading batch axis.

    Uses ``|rho_dot - a rho| / sqrt(Tr rho^2)`` with ``a = Tr(rho rho_dot)/Tr rho^2``,
    the same quantity as ``sqrt(Tr rho_dot^2 Tr rho^2 - (Tr rho rho_dot)^2) / Tr rho^2``
    without the cancellation.
    """
    rho = np.asarray(rho, dtype=complex)
    rho_dot = np.asarray(rho_dot, dtype=complex)
    _check_derivative(rho_dot)
    pur = np.einsum("...ij,...ij->...", rho.conj(), rho).real
    overlap = np.einsum("...ij,...ij->...", rho.conj(), rho_dot).real
    perp = rho_dot - (overlap / pur)[..., None, None] * rho
    return np.linalg.norm(perp, axis=(-2, -1)) / np.sqrt(pur)


def speeds_e(rho_dot: np.ndarray) -> np.ndarray:
    rho_dot = np.asarray(rho_dot, dtype=complex)
    _check_derivative(rho_dot)
    return np.linalg.norm(rho_dot, axis=(-2, -1))


def speed_d(rho, rho_dot) -> float:
    """Speed in the angle metric, ``sqrt(Tr rho_dot^2 Tr rho^2 - (Tr rho rho_dot)^2) / Tr rho^2``.

    Raises:
        TraceNotOne: ``rho_dot`` is not traceless.
        NotHermitian: ``rho_dot`` is not Hermitian.
    """
    a, b = _pair(rho, rho_dot)
    return float(speeds_d(a, b))


def speed_e(rho_dot) -> float:
    return float(speeds_e(as_matrix(rho_dot)))


def speed_from_normalized(p_dot) -> float:
    """sqrt(<P_dot, P_dot>); the cross-check route for :func:`speed_d`."""
    m = as_matrix(p_dot)
    return float(np.sqrt(np.vdot(m, m).real))
