"""Speed-limit times, path lengths and geodesics.

For a trajectory rho_t on [0, tau] every bound has the form

    tau_X = distance_X(rho_0, rho_tau) * tau / integral_0^tau speed_X dt,

with ``X`` the angle metric (``tau_qsl``), the Euclidean metric (``tau_e``) or
``distance_phi`` over the angle-metric length (``tau_phi``). Integrals use
composite Simpson on the trajectory grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import simpson

from .core import as_matrix, hs_inner
from .dynamics import GADParams, Trajectory, _closed_form_trajectory, _uniform_times
from .errors import InconsistentPath, QSLError
from .metric import SpeedSample, distance_d, distance_e, distance_phi, safe_arccos, speeds_d, speeds_e

MIN_NODES = 16
ZERO_LENGTH = 1e-13
ZERO_DISTANCE = 1e-10
REFINE_TOL = 1e-8

Metric = Literal["D", "E"]


# --------------------------------------------------------------------------- #
# Derivatives and path lengths
# --------------------------------------------------------------------------- #


def central_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Fourth-order finite differences along axis 0 on a uniform grid.

    Interior nodes use the five-point central stencil, the two nodes at each
    end the matching one-sided stencils.
    """
    times = np.asarray(times, dtype=float)
    h = np.diff(times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("finite-difference derivatives need a uniform grid")
    if times.size < 5:
        raise ValueError("need at least 5 nodes")
    h = h[0]
    f = np.asarray(values)
    d = np.empty_like(f)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def trajectory_derivatives(traj: Trajectory) -> np.ndarray:
    if traj.derivatives is not None:
        return traj.derivatives
    d = central_derivative(traj.times, traj.states)
    return 0.5 * (d + np.swapaxes(d.conj(), -1, -2))


def speed_profile(traj: Trajectory) -> list[SpeedSample]:
    derivs = trajectory_derivatives(traj)
    vd = speeds_d(traj.states, derivs)
    ve = speeds_e(derivs)
    return [SpeedSample(float(t), float(a), float(b)) for t, a, b in zip(traj.times, vd, ve)]


def _length_on_grid(traj: Trajectory, which: Metric) -> float:
    if len(traj) < MIN_NODES:
        raise ValueError(f"path length needs >= {MIN_NODES} nodes, got {len(traj)}")
    derivs = trajectory_derivatives(traj)
    if which == "D":
        speed = speeds_d(traj.states, derivs)
    elif which == "E":
        speed = speeds_e(derivs)
    else:
        raise ValueError(f"unknown metric {which!r}")
    return float(max(simpson(speed, x=traj.times), 0.0))


def path_length(traj: Trajectory, which: Metric = "D", refine: bool = False, max_doublings: int = 6) -> float:
    """Length of the trajectory in the angle (``"D"``) or Euclidean (``"E"``) metric.

    With ``refine=True`` and a trajectory that can be resampled, the grid is
    doubled until two successive lengths differ by less than 1e-8.
    """
    length = _length_on_grid(traj, which)
    if not refine or traj.resample is None:
        return length
    points = len(traj)
    for _ in range(max_doublings):
        points = 2 * (points - 1) + 1
        finer = _length_on_grid(traj.resample(points), which)
        converged = abs(finer - length) < REFINE_TOL
        length = finer
        if converged:
            break
    return length


# --------------------------------------------------------------------------- #
# Speed-limit times
# --------------------------------------------------------------------------- #


def _bound(distance: float, length: float, tau: float) -> float:
    if length <= ZERO_LENGTH:
        if distance <= ZERO_DISTANCE:
            return 0.0
        raise InconsistentPath(f"zero path length but endpoint distance {distance:.3e}")
    return distance * tau / length


def tau_qsl(traj: Trajectory, refine: bool = False) -> float:
    """Angle-metric bound: endpoint angle times tau over the path length."""
    d = distance_d(traj.states[0], traj.states[-1])
    return _bound(d, path_length(traj, "D", refine), traj.tau)


def tau_e(traj: Trajectory, refine: bool = False) -> float:
    d = distance_e(traj.states[0], traj.states[-1])
    return _bound(d, path_length(traj, "E", refine), traj.tau)


def tau_phi(traj: Trajectory, refine: bool = False) -> float:
    d = distance_phi(traj.states[0], traj.states[-1])
    return _bound(d, path_length(traj, "D", refine), traj.tau)


@dataclass(frozen=True)
class BoundReport:
    tau: float
    length_d: float
    length_e: float
    dist_d: float
    dist_e: float
    dist_phi: float
    tau_qsl: float
    tau_e: float
    tau_phi: float
    tau_combined: float
    ratio_qsl: float
    ratio_e: float
    ratio_phi: float
    ratio_combined: float
    gap: float
    model_tag: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def report(traj: Trajectory, refine: bool = False) -> BoundReport:
    """Every bound, length and endpoint distance for one trajectory.

    ``tau_combined`` is the larger of ``tau_qsl`` and ``tau_e``; ``gap`` is
    ``tau_qsl - tau_e``.
    """
    first, last = traj.states[0], traj.states[-1]
    len_d = path_length(traj, "D", refine)
    len_e = path_length(traj, "E", refine)
    dd, de, dp = distance_d(first, last), distance_e(first, last), distance_phi(first, last)
    tau = traj.tau
    tq, te, tp = _bound(dd, len_d, tau), _bound(de, len_e, tau), _bound(dp, len_d, tau)
    comb = max(tq, te)
    return BoundReport(
        tau=tau,
        length_d=len_d,
        length_e=len_e,
        dist_d=dd,
        dist_e=de,
        dist_phi=dp,
        tau_qsl=tq,
        tau_e=te,
        tau_phi=tp,
        tau_combined=comb,
        ratio_qsl=tq / tau,
        ratio_e=te / tau,
        ratio_phi=tp / tau,
        ratio_combined=comb / tau,
        gap=tq - te,
        model_tag=traj.model_tag,
    )


# --------------------------------------------------------------------------- #
# Geodesics
# --------------------------------------------------------------------------- #

BetaLaw = Callable[[np.ndarray], np.ndarray]

BETA_LAWS: dict[str, tuple[BetaLaw, BetaLaw]] = {
    "linear": (lambda s: s, lambda s: np.ones_like(s)),
    "quadratic": (lambda s: s**2, lambda s: 2 * s),
    "sine": (lambda s: np.sin(np.pi * s / 2), lambda s: np.pi / 2 * np.cos(np.pi * s / 2)),
}


def geodesic_path(
    rho0,
    rho_tau,
    beta: str | BetaLaw = "linear",
    grid: int = 257,
    tau: float = 1.0,
    beta_dot: BetaLaw | None = None,
) -> Trajectory:
    """Straight segment ``(1 - beta) rho0 + beta rho_tau`` traversed on [0, tau].

    ``beta`` is a named law (``linear``, ``quadratic``, ``sine``) in the
    reduced time ``t/tau``, or a callable of ``t`` with ``beta(0) = 0`` and
    ``beta(tau) = 1``. Without ``beta_dot`` a callable is differentiated
    numerically.
    """
    a, b = as_matrix(rho0), as_matrix(rho_tau)
    if a.shape != b.shape:
        raise ValueError("endpoint dimensions differ")
    if isinstance(beta, str):
        try:
            law, law_dot = BETA_LAWS[beta]
        except KeyError:
            raise ValueError(f"unknown beta law {beta!r}; choose from {sorted(BETA_LAWS)}") from None
        beta_fn = lambda t: law(np.asarray(t) / tau)  # noqa: E731
        beta_dot_fn = lambda t: law_dot(np.asarray(t) / tau) / tau  # noqa: E731
    else:
        beta_fn, beta_dot_fn = beta, beta_dot

    probe = beta_fn(_uniform_times(tau, max(grid, 1025)))
    if abs(probe[0]) > 1e-12 or abs(probe[-1] - 1) > 1e-12:
        raise ValueError("beta must satisfy beta(0) = 0 and beta(tau) = 1")
    if np.any(np.diff(probe) < -1e-12):
        raise ValueError("beta must be monotone nondecreasing")

    direction = b - a

    def evaluate(times):
        bt = np.asarray(beta_fn(times), dtype=float)
        if beta_dot_fn is None:
            bd = central_derivative(times, bt)
        else:
            bd = np.asarray(beta_dot_fn(times), dtype=float)
        states = a[None] + bt[:, None, None] * direction[None]
        return states, bd[:, None, None] * direction[None]

    return _closed_form_trajectory(evaluate, tau, grid, "geodesic")


@dataclass(frozen=True)
class GeodesicCheck:
    is_geodesic: bool
    max_residual: float
    beta_samples: np.ndarray = field(repr=False)
    monotone: bool
    beta_end: float


def is_geodesic(traj: Trajectory, tol: float = 1e-6) -> GeodesicCheck:
    """Test whether ``rho_t = rho_0 + beta_t C`` with ``C = rho_tau - rho_0`` and monotone beta.

    ``max_residual`` is the largest distance of a node from the chord line,
    measured in units of ``|C|``.

    Raises:
        QSLError: identical endpoints, so the direction ``C`` is undefined.
    """
    states = traj.states
    c = states[-1] - states[0]
    cc = float(np.vdot(c, c).real)
    if math.sqrt(cc) <= tol:
        raise QSLError("identical endpoints: geodesic direction undefined")
    delta = states - states[0][None]
    beta = np.einsum("ij,tij->t", c.conj(), delta).real / cc
    # residual relative to the chord, so short trajectories are judged on shape, not size
    resid = np.linalg.norm(delta - beta[:, None, None] * c[None], axis=(1, 2)) / math.sqrt(cc)
    steps = np.diff(beta)
    monotone = bool(np.all(steps >= -tol) or np.all(steps <= tol))
    max_res = float(resid.max())
    beta_end = float(beta[-1])
    ok = max_res <= tol and monotone and abs(beta_end - 1) <= tol
    return GeodesicCheck(ok, max_res, beta, monotone, beta_end)


# --------------------------------------------------------------------------- #
# Closed-form arc lengths
# --------------------------------------------------------------------------- #


def gad_constants(params: GADParams) -> tuple[float, float, float]:
    """``(a, b, c)`` with ``b = sum_{i>0} lambda_i``, ``c = sqrt(sum_{i>0} lambda_i^2)``, ``a = b^2 + c^2``.

    ``c`` runs over the excited levels only; including ``lambda_0`` disagrees
    with direct quadrature of the speed.
    """
    exc = params.excited
    b = float(exc.sum())
    c = float(np.sqrt(np.sum(exc**2)))
    return b * b + c * c, b, c


def gad_arc_closed_form(params: GADParams, q_tau: float) -> tuple[float, float]:
    """Path length and endpoint distance of the GAD trajectory for monotone ``q``.

    Returns ``(|atan((a q - b)/c) - atan((a - b)/c)|, arccos(overlap))``.
    """
    if not (0.0 < q_tau <= 1.0):
        raise ValueError(f"q_tau={q_tau} outside (0, 1]")
    a, b, c = gad_constants(params)
    if c == 0.0:
        return 0.0, 0.0
    length = abs(math.atan((a * q_tau - b) / c) - math.atan((a - b) / c))

    def f(q):
        return math.sqrt(1 - 2 * b * q + a * q * q)

    overlap = (1 - b * (q_tau + 1) + a * q_tau) / (f(1.0) * f(q_tau))
    return length, safe_arccos(overlap)


def dephasing_arc_closed_form(ratio: float, gamma_tau: float) -> tuple[float, float]:
    """Path length and endpoint distance of uniform dephasing.

    ``ratio`` is the coherence/population ratio R of the initial state and
    ``gamma_tau`` the accumulated dephasing exponent.
    """
    if ratio < 0 or gamma_tau < 0:
        raise ValueError("ratio and gamma_tau must be non-negative")
    length = math.atan(ratio) - math.atan(math.exp(-gamma_tau) * ratio)

    def f(k, s):
        return math.sqrt(1 + ratio**k * math.exp(-s * gamma_tau))

    overlap = f(2, 1) ** 2 / (f(2, 0) * f(2, 2))
    return length, safe_arccos(overlap)


def geodesic_arc_closed_form(rho0, rho_tau) -> float:
    """Angle-metric length of the straight segment between two states."""
    a, b = as_matrix(rho0), as_matrix(rho_tau)
    delta = b - a
    dd = hs_inner(delta, delta).real
    p0 = hs_inner(a, a).real
    x = hs_inner(a, delta).real
    root = math.sqrt(max(dd * p0 - x * x, 0.0))
    if root == 0.0:
        return 0.0
    return math.atan((dd + x) / root) - math.atan(x / root)
