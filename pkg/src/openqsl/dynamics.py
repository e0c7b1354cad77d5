"""Trajectories of density matrices.

Two routes produce a :class:`Trajectory`:

* :func:`integrate` -- classical fixed-step RK4 on an arbitrary generator
  ``(t, rho) -> rho_dot``, with Hermitian projection and drift checks after
  every step;
* closed-form propagators for generalized amplitude damping (GAD), dephasing,
  the thermal Kraus channel, the driven-damped qubit, unitary evolution and
  the bipartite random-unitary sampler.

Closed-form trajectories carry analytic derivatives and a ``resample`` hook so
path lengths can be refined on finer grids.

Generators are written with ``@`` so they also accept a leading batch axis of
states; that is how the closed-form trajectories obtain exact derivatives.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .core import (
    DensityMatrix,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SIGMA_MINUS,
    Seed,
    _rng,
    as_matrix,
    partial_trace_array,
    purity,
    random_density,
    random_hamiltonian,
    validate_density,
)
from .errors import (
    NotHermitian,
    NotPositive,
    NumericalError,
    PoleAt,
    PositivityLoss,
    TraceDrift,
    TraceNotOne,
)

TRAJECTORY_TOL = 1e-6
DRIFT_LIMIT = 1e-6
POLE_EPS = 1e-12

Generator = Callable[[float, np.ndarray], np.ndarray]


def _commutator(h: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return h @ rho - rho @ h


def _dagger(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m.conj(), -1, -2)


# --------------------------------------------------------------------------- #
# Trajectory
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid from 0 to tau.

    Attributes:
        times: strictly increasing, ``times[0] == 0``.
        states: ``(n, N, N)`` complex array, one density matrix per time.
        model_tag: which dynamics produced the states.
        dt_nominal: requested step (integrator) or grid spacing.
        derivatives: optional ``(n, N, N)`` array of ``rho_dot`` at each node.
        meta: free-form provenance (seed, parameters, initial purity ...).
        resample: optional ``grid_points -> Trajectory`` rebuilding the same
            evolution on another grid.
    """

    times: np.ndarray
    states: np.ndarray
    model_tag: str
    dt_nominal: float
    derivatives: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    resample: Callable[[int], "Trajectory"] | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 3 or states.shape[1] != states.shape[2] or states.shape[0] != times.size:
            raise ValueError(f"states shape {states.shape} does not match {times.size} times")
        if times.size < 2 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if self.derivatives is not None and np.shape(self.derivatives) != states.shape:
            raise ValueError("derivatives must match states in shape")
        _validate_batch(times, states, TRAJECTORY_TOL)
        for arr in (times, states):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if self.derivatives is not None:
            d = np.array(self.derivatives, dtype=complex)
            d.setflags(write=False)
            object.__setattr__(self, "derivatives", d)

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def state(self, index: int) -> DensityMatrix:
        return validate_density(self.states[index], TRAJECTORY_TOL)

    @property
    def initial(self) -> DensityMatrix:
        return self.state(0)

    @property
    def final(self) -> DensityMatrix:
        return self.state(-1)


def _validate_batch(times: np.ndarray, states: np.ndarray, tol: float) -> None:
    herm = np.max(np.abs(states - _dagger(states)), axis=(1, 2))
    if np.any(herm > tol):
        i = int(np.argmax(herm))
        raise NotHermitian(herm[i], f"NotHermitian: {herm[i]:.3e} at t={times[i]:.6g}")
    trace_err = np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)
    if np.any(trace_err > tol):
        i = int(np.argmax(trace_err))
        raise TraceNotOne(trace_err[i], f"TraceNotOne: {trace_err[i]:.3e} at t={times[i]:.6g}")
    min_eigs = np.linalg.eigvalsh(0.5 * (states + _dagger(states)))[:, 0]
    if np.any(min_eigs < -tol):
        i = int(np.argmin(min_eigs))
        raise NotPositive(-min_eigs[i], f"NotPositive: min eigenvalue {min_eigs[i]:.3e} at t={times[i]:.6g}")


def _uniform_times(tau: float, grid_points: int) -> np.ndarray:
    if tau <= 0:
        raise ValueError("tau must be positive")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    return np.linspace(0.0, float(tau), int(grid_points))


# --------------------------------------------------------------------------- #
# Integrator
# --------------------------------------------------------------------------- #


def integrate(
    generator: Generator,
    rho0,
    tau: float,
    dt: float,
    *,
    model_tag: str = "generic",
    meta: dict | None = None,
) -> Trajectory:
    """Fixed-step RK4 integration of ``rho_dot = generator(t, rho)`` on [0, tau].

    The step is ``tau / ceil(tau / dt)``. After every step the state is
    projected onto Hermitian matrices; trace drift above 1e-6 or an eigenvalue
    below -1e-6 aborts the run.

    Raises:
        TraceDrift, PositivityLoss: with the time of failure.
    """
    if dt <= 0 or dt > tau / 10 * (1 + 1e-12):
        raise ValueError(f"dt={dt} must be in (0, tau/10]")
    n = int(math.ceil(tau / dt - 1e-9))
    h = tau / n
    rho = np.array(as_matrix(rho0), dtype=complex)
    dim = rho.shape[0]
    states = np.empty((n + 1, dim, dim), dtype=complex)
    derivs = np.empty_like(states)
    states[0] = rho
    times = np.arange(n + 1) * h
    times[-1] = tau
    for k in range(n):
        t = times[k]
        k1 = generator(t, rho)
        derivs[k] = k1
        k2 = generator(t + h / 2, rho + h / 2 * k1)
        k3 = generator(t + h / 2, rho + h / 2 * k2)
        k4 = generator(t + h, rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t_next = times[k + 1]
        drift = abs(np.trace(rho) - 1.0)
        if drift > DRIFT_LIMIT:
            raise TraceDrift(t_next, drift)
        min_eig = np.linalg.eigvalsh(rho)[0]
        if min_eig < -DRIFT_LIMIT:
            raise PositivityLoss(t_next, min_eig)
        states[k + 1] = rho
    derivs[n] = generator(times[n], rho)
    return Trajectory(times, states, model_tag, dt, derivs, dict(meta or {}, steps=n, dt=h))


def _closed_form_trajectory(
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    tau: float,
    grid_points: int,
    model_tag: str,
    meta: dict | None = None,
) -> Trajectory:
    def build(points: int) -> Trajectory:
        times = _uniform_times(tau, points)
        states, derivs = evaluate(times)
        return Trajectory(
            times, states, model_tag, tau / (points - 1), derivs, dict(meta or {}), resample=build
        )

    return build(grid_points)


# --------------------------------------------------------------------------- #
# Decay-rate laws
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class NonMarkovRate:
    """Decay rate of a qubit coupled to a Lorentzian reservoir.

    ``gamma_t = 2 g0 lam sinh(d t/2) / (d cosh(d t/2) + lam sinh(d t/2))`` with
    ``d = sqrt(lam^2 - 2 g0 lam)``. For ``g0 > lam/2`` ``d`` is imaginary and
    the hyperbolic functions turn trigonometric.

    The excited-state survival ``q_t = exp(-int gamma)`` equals ``G(t)^2`` with
    ``G = exp(-lam t/2) (cosh(d t/2) + lam/d sinh(d t/2))``; this stays finite
    through the poles of ``gamma_t``, where ``G`` crosses zero.
    """

    gamma0: float
    lam: float

    def __post_init__(self):
        if self.gamma0 <= 0 or self.lam <= 0:
            raise ValueError("gamma0 and lam must be positive")

    @property
    def disc(self) -> float:
        return self.lam**2 - 2 * self.gamma0 * self.lam

    @property
    def markovian(self) -> bool:
        return self.disc >= 0

    def _branches(self, t):
        """Return (s, c, d) with G ~ c + lam/d * s and the matching derivative factors."""
        t = np.asarray(t, dtype=float)
        disc = self.disc
        if disc > 0:
            d = math.sqrt(disc)
            return np.sinh(d * t / 2), np.cosh(d * t / 2), d, 1.0
        if disc < 0:
            d = math.sqrt(-disc)
            return np.sin(d * t / 2), np.cos(d * t / 2), d, -1.0
        return t / 2, np.ones_like(t), 0.0, 0.0

    def denominator(self, t):
        s, c, d, _ = self._branches(t)
        if d == 0.0:
            return 1.0 + self.lam * s
        return d * c + self.lam * s

    def gamma(self, t):
        s, _, _, _ = self._branches(t)
        # d == 0 uses s = t/2, the limit of sinh(d t/2)/d
        return 2 * self.gamma0 * self.lam * s / self.denominator(t)

    def amplitude(self, t):
        s, c, d, _ = self._branches(t)
        env = np.exp(-self.lam * np.asarray(t, dtype=float) / 2)
        if d == 0.0:
            return env * (1.0 + self.lam * s)
        return env * (c + self.lam / d * s)

    def amplitude_dot(self, t):
        s, c, d, sign = self._branches(t)
        env = np.exp(-self.lam * np.asarray(t, dtype=float) / 2)
        g = self.amplitude(t)
        if d == 0.0:
            inner = self.lam / 2 * np.ones_like(s)
        else:
            # d/dt [c + lam/d s] = sign*d/2 s + lam/2 c
            inner = sign * d / 2 * s + self.lam / 2 * c
        return -self.lam / 2 * g + env * inner

    def q(self, t):
        return self.amplitude(t) ** 2

    def q_dot(self, t):
        return 2 * self.amplitude(t) * self.amplitude_dot(t)

    def poles(self, t_max: float) -> list[float]:
        """Times in (0, t_max] where the rate's denominator vanishes."""
        if self.markovian:
            return []
        d = math.sqrt(-self.disc)
        out, k = [], 1
        while True:
            t = 2 * (math.pi * k - math.atan2(d, self.lam)) / d
            if t > t_max:
                return out
            out.append(t)
            k += 1


def nonmarkov_gamma(rate: NonMarkovRate, t: float) -> float:
    """Evaluate the non-Markovian decay rate at ``t``.

    Raises:
        PoleAt: the denominator magnitude is below 1e-12.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    den = float(rate.denominator(t))
    if abs(den) < POLE_EPS:
        raise PoleAt(t)
    return float(rate.gamma(t))


@dataclass(frozen=True, eq=False)
class TabulatedRate:
    """Piecewise-linear decay rate from a table ``(t_k, gamma_k)`` with ``t_0 = 0``."""

    times: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        g = np.asarray(self.gammas, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise ValueError("rate table needs two equal-length columns with >= 2 rows")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("rate table times must start at 0 and increase strictly")
        if not np.all(np.isfinite(g)):
            raise ValueError("rate table contains non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "gammas", g)
        cum = np.concatenate([[0.0], np.cumsum(np.diff(t) * (g[1:] + g[:-1]) / 2)])
        object.__setattr__(self, "_cumulative", cum)

    @property
    def monotone(self) -> bool:
        """Whether q_t is monotone, i.e. gamma_t keeps one sign."""
        return bool(np.all(self.gammas >= 0) or np.all(self.gammas <= 0))

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.times[-1] * (1 + 1e-12)):
            raise ValueError(f"t beyond tabulated range {self.times[-1]}")
        return np.interp(t, self.times, self.gammas)

    def integral(self, t):
        """Trapezoidal integral of gamma from 0 to t (exact for the linear interpolant)."""
        t = np.asarray(t, dtype=float)
        g_t = self.gamma(t)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 1)
        t0 = self.times[idx]
        return self._cumulative[idx] + (t - t0) * (self.gammas[idx] + g_t) / 2


def load_rate_csv(path: str | Path) -> TabulatedRate:
    """Read a two-column ``t, gamma_t`` CSV (optional header row)."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{i + 1}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise
    arr = np.array(rows, dtype=float)
    return TabulatedRate(arr[:, 0], arr[:, 1])


Rate = Union[float, NonMarkovRate, TabulatedRate]


# --------------------------------------------------------------------------- #
# Generalized amplitude damping
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class GADParams:
    """N-level amplitude damping towards |0> with a common decay rate.

    ``populations`` is ``(lambda_0, ..., lambda_{N-1})`` for the diagonal
    initial state. ``lamb_shift`` maps t to the ``N-1`` shifts ``s_t^k``
    (default: zero).
    """

    populations: tuple
    rate: Rate = 1.0
    lamb_shift: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        lam = np.asarray(self.populations, dtype=float)
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("need at least two populations")
        if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-12:
            raise ValueError("populations must be a probability vector")
        object.__setattr__(self, "populations", tuple(float(x) for x in lam))

    @classmethod
    def qubit(cls, excited: float, rate: Rate = 1.0) -> "GADParams":
        return cls((1.0 - excited, excited), rate)

    @property
    def dim(self) -> int:
        return len(self.populations)

    @property
    def excited(self) -> np.ndarray:
        return np.asarray(self.populations[1:])

    @property
    def markovian(self) -> bool:
        if isinstance(self.rate, NonMarkovRate):
            return self.rate.markovian
        if isinstance(self.rate, TabulatedRate):
            return self.rate.monotone
        return True

    def gamma(self, t):
        if isinstance(self.rate, (NonMarkovRate, TabulatedRate)):
            return self.rate.gamma(t)
        return float(self.rate) * np.ones_like(np.asarray(t, dtype=float))

    def q(self, t):
        t = np.asarray(t, dtype=float)
        if isinstance(self.rate, NonMarkovRate):
            return self.rate.q(t)
        if isinstance(self.rate, TabulatedRate):
            return np.exp(-self.rate.integral(t))
        return np.exp(-float(self.rate) * t)

    def q_dot(self, t):
        if isinstance(self.rate, NonMarkovRate):
            return self.rate.q_dot(t)
        return -self.gamma(t) * self.q(t)


def gad_generator(params: GADParams) -> Generator:
    """Amplitude-damping master equation with common rate and optional Lamb shifts."""
    n = params.dim
    lowering = []
    for k in range(1, n):
        s = np.zeros((n, n), dtype=complex)
        s[0, k] = 1.0
        lowering.append(s)
    number = [l.conj().T @ l for l in lowering]
    projectors = [np.diag(np.eye(n)[k]).astype(complex) for k in range(1, n)]

    def generator(t, rho):
        g = float(params.gamma(t))
        out = np.zeros_like(rho)
        for s_minus, nk in zip(lowering, number):
            out = out + g / 2 * (2 * s_minus @ rho @ s_minus.conj().T - nk @ rho - rho @ nk)
        if params.lamb_shift is not None:
            shifts = np.asarray(params.lamb_shift(t), dtype=float)
            for s_k, proj in zip(shifts, projectors):
                out = out - 1j * _commutator(s_k / 2 * proj, rho)
        return out

    return generator


def _gad_arrays(params: GADParams, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = np.atleast_1d(params.q(t))
    qd = np.atleast_1d(params.q_dot(t))
    exc = params.excited
    b = exc.sum()
    diag = np.empty((q.size, params.dim))
    diag[:, 0] = 1.0 - b * q
    diag[:, 1:] = q[:, None] * exc[None, :]
    ddiag = np.empty_like(diag)
    ddiag[:, 0] = -b * qd
    ddiag[:, 1:] = qd[:, None] * exc[None, :]
    eye = np.eye(params.dim)
    states = diag[:, :, None] * eye[None]
    derivs = ddiag[:, :, None] * eye[None]
    return states.astype(complex), derivs.astype(complex)


def _check_q(params: GADParams, q: np.ndarray) -> None:
    if params.markovian:
        if np.any(q <= 0) or np.any(q > 1 + 1e-12):
            raise NumericalError(f"q_t outside (0, 1] for a Markovian law: {q}")
    elif np.any(q < -1e-12) or np.any(q > 1 + 1e-12):
        raise NumericalError(f"q_t outside [0, 1]: {q}")


def gad_solution(params: GADParams, t: float) -> DensityMatrix:
    """Closed-form GAD state ``(1 - b q_t)|0><0| + sum_{i>0} lambda_i q_t |i><i|``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    q = np.atleast_1d(params.q(t))
    _check_q(params, q)
    states, _ = _gad_arrays(params, np.array([t], dtype=float))
    return validate_density(states[0])


def gad_trajectory(params: GADParams, tau: float, grid_points: int = 257) -> Trajectory:
    def evaluate(times):
        _check_q(params, params.q(times))
        return _gad_arrays(params, times)

    return _closed_form_trajectory(
        evaluate, tau, grid_points, "gad", {"populations": list(params.populations)}
    )


def gad_initial(params: GADParams) -> DensityMatrix:
    return validate_density(np.diag(params.populations).astype(complex))


# --------------------------------------------------------------------------- #
# Dephasing
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class DephasingParams:
    """Uniform dephasing: every coherence is multiplied by ``exp(-gamma_t)``."""

    rho0: DensityMatrix
    gamma: Callable[[np.ndarray], np.ndarray]
    gamma_dot: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def linear(cls, rho0, rate: float) -> "DephasingParams":
        """``gamma_t = rate * t``."""
        rho0 = rho0 if isinstance(rho0, DensityMatrix) else validate_density(rho0)
        return cls(
            rho0,
            lambda t: rate * np.asarray(t, dtype=float),
            lambda t: rate * np.ones_like(np.asarray(t, dtype=float)),
        )

    @property
    def dim(self) -> int:
        return self.rho0.dim


def dephasing_ratio(rho0) -> float:
    """Coherence-to-population ratio ``sqrt(sum_{j!=k} |rho_jk|^2 / sum_i rho_ii^2)``."""
    m = as_matrix(rho0)
    diag = np.diag(m)
    off = np.sum(np.abs(m) ** 2) - np.sum(np.abs(diag) ** 2)
    return float(np.sqrt(off / np.sum(np.abs(diag) ** 2)))


def dephasing_generator(params: DephasingParams) -> Generator:
    def generator(t, rho):
        d = np.zeros_like(rho)
        idx = np.arange(rho.shape[-1])
        d[..., idx, idx] = rho[..., idx, idx]
        return -float(params.gamma_dot(t)) * (rho - d)

    return generator


def _dephasing_arrays(params: DephasingParams, t: np.ndarray):
    m = params.rho0.matrix
    diag = np.diag(np.diag(m))
    off = m - diag
    g = np.atleast_1d(params.gamma(t))
    gd = np.atleast_1d(params.gamma_dot(t))
    decay = np.exp(-g)
    states = diag[None] + decay[:, None, None] * off[None]
    derivs = (-gd * decay)[:, None, None] * off[None]
    return states, derivs


def dephasing_solution(params: DephasingParams, t: float) -> DensityMatrix:
    if t < 0:
        raise ValueError("t must be >= 0")
    states, _ = _dephasing_arrays(params, np.array([t], dtype=float))
    return validate_density(states[0])


def dephasing_trajectory(params: DephasingParams, tau: float, grid_points: int = 257) -> Trajectory:
    return _closed_form_trajectory(
        lambda times: _dephasing_arrays(params, times), tau, grid_points, "dephasing"
    )


# --------------------------------------------------------------------------- #
# Thermal Kraus channel
# --------------------------------------------------------------------------- #


def log_schedule(scale: float = 100.0):
    """``p(t) = ln(1 + t/scale)`` and its derivative; ``p <= 1`` up to ``scale (e - 1)``."""
    return (
        lambda t: np.log1p(np.asarray(t, dtype=float) / scale),
        lambda t: 1.0 / (scale + np.asarray(t, dtype=float)),
        scale * (math.e - 1.0),
    )


@dataclass(frozen=True, eq=False)
class ThermalKrausParams:
    """Qubit in contact with a thermal bath.

    ``c`` is the bath parameter, ``p`` the increasing path function with
    ``p(0) = 0``. The initial state has excited population ``rho11`` and
    coherence ``rho10`` in the ``|0><1|`` entry.
    """

    c: float
    rho11: float
    rho10: complex
    p: Callable[[np.ndarray], np.ndarray]
    p_dot: Callable[[np.ndarray], np.ndarray]
    t_max: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if not 0.0 <= self.rho11 <= 1.0:
            raise ValueError("rho11 must lie in [0, 1]")

    @classmethod
    def pure(cls, c: float, rho11: float, scale: float = 100.0) -> "ThermalKrausParams":
        """Pure initial state with real coherence ``sqrt(rho11 (1 - rho11))``."""
        p, p_dot, t_max = log_schedule(scale)
        return cls(c, rho11, math.sqrt(max(rho11 * (1.0 - rho11), 0.0)), p, p_dot, t_max)

    @property
    def rho0(self) -> np.ndarray:
        return np.array(
            [[1.0 - self.rho11, self.rho10], [np.conj(self.rho10), self.rho11]], dtype=complex
        )


def kraus_operators(c: float, p: float) -> list[np.ndarray]:
    """The four Kraus operators of the thermal channel at path value ``p``."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p={p} outside [0, 1]")
    sc, sn = math.sqrt(c), math.sqrt(1.0 - c)
    sp, sq = math.sqrt(p), math.sqrt(1.0 - p)
    return [
        sc * np.array([[sq, 0], [0, 1]], dtype=complex),
        sc * np.array([[0, 0], [sp, 0]], dtype=complex),
        sn * np.array([[1, 0], [0, sq]], dtype=complex),
        sn * np.array([[0, sp], [0, 0]], dtype=complex),
    ]


def apply_kraus(ops: Sequence[np.ndarray], rho) -> np.ndarray:
    m = as_matrix(rho)
    return sum(k @ m @ k.conj().T for k in ops)


def _kraus_arrays(params: ThermalKrausParams, t: np.ndarray):
    p = np.atleast_1d(params.p(t))
    pd = np.atleast_1d(params.p_dot(t))
    if np.any(p < -1e-15) or np.any(p > 1.0):
        raise ValueError("p(t) left [0, 1] on the requested horizon")
    p = np.clip(p, 0.0, 1.0)
    shift = params.c - params.rho11
    r11 = shift * p + params.rho11
    root = np.sqrt(1.0 - p)
    states = np.empty((p.size, 2, 2), dtype=complex)
    states[:, 1, 1] = r11
    states[:, 0, 0] = 1.0 - r11
    states[:, 0, 1] = root * params.rho10
    states[:, 1, 0] = root * np.conj(params.rho10)
    derivs = np.empty_like(states)
    derivs[:, 1, 1] = shift * pd
    derivs[:, 0, 0] = -shift * pd
    with np.errstate(divide="ignore", invalid="ignore"):
        droot = np.where(root > 0, -pd / (2 * root), 0.0)
    derivs[:, 0, 1] = droot * params.rho10
    derivs[:, 1, 0] = droot * np.conj(params.rho10)
    return states, derivs


def kraus_thermal(params: ThermalKrausParams, t: float) -> DensityMatrix:
    """Closed-form state of the thermal channel at time ``t``."""
    states, _ = _kraus_arrays(params, np.array([t], dtype=float))
    return validate_density(states[0])


def kraus_trajectory(params: ThermalKrausParams, tau: float, grid_points: int = 257) -> Trajectory:
    if tau > params.t_max * (1 + 1e-12):
        raise ValueError(f"tau={tau} exceeds the p(t) <= 1 horizon {params.t_max:.6g}")
    return _closed_form_trajectory(
        lambda times: _kraus_arrays(params, times),
        tau,
        grid_points,
        "kraus-thermal",
        {"c": params.c, "rho11": params.rho11},
    )


# --------------------------------------------------------------------------- #
# Driven-damped qubit
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class AppendixBParams:
    """Qubit with ``H = Omega_L/2 (cos(theta) Z + sin(theta) X)`` decaying along the rotated axis."""

    theta: float
    omega_l: float
    gamma: float
    r0: tuple = (0.5, 0.0, 0.5)

    def __post_init__(self):
        r = tuple(float(x) for x in self.r0)
        if len(r) != 3 or np.linalg.norm(r) > 1 + 1e-12:
            raise ValueError("r0 must be a Bloch vector with |r0| <= 1")
        object.__setattr__(self, "r0", r)

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.omega_l / 2 * (math.cos(self.theta) * PAULI_Z + math.sin(self.theta) * PAULI_X)

    @property
    def lowering(self) -> np.ndarray:
        half = self.theta / 2
        u = math.cos(half) * np.eye(2) - 1j * math.sin(half) * PAULI_Y
        return u @ SIGMA_MINUS @ u.conj().T


def appendix_b_generator(params: AppendixBParams) -> Generator:
    """Trace-preserving Lindblad generator ``-i[H, rho] + gamma D[Sigma_-](rho)``."""
    h = params.hamiltonian
    s_minus = params.lowering
    s_plus = s_minus.conj().T
    n_op = s_plus @ s_minus
    g = params.gamma

    def generator(t, rho):
        return -1j * _commutator(h, rho) + g / 2 * (
            2 * s_minus @ rho @ s_plus - n_op @ rho - rho @ n_op
        )

    return generator


def appendix_b_bloch(params: AppendixBParams, t) -> np.ndarray:
    """Bloch vector(s) at ``t``; shape ``(..., 3)``."""
    t = np.asarray(t, dtype=float)
    th, w, g = params.theta, params.omega_l, params.gamma
    rx0, ry0, rz0 = params.r0
    s, c = math.sin(th), math.cos(th)
    half = np.exp(-g * t / 2)
    full = np.exp(-g * t)
    cw, sw = np.cos(w * t), np.sin(w * t)
    rx = half * ((s * s * half + c * c * cw) * rx0 - c * sw * ry0 + s * c * (half - cw) * rz0) + s * (
        full - 1
    )
    ry = half * (c * sw * rx0 + cw * ry0 - s * sw * rz0)
    rz = half * (s * c * (half - cw) * rx0 + s * sw * ry0 + (c * c * half + s * s * cw) * rz0) + c * (
        full - 1
    )
    return np.stack([rx, ry, rz], axis=-1)


def _bloch_to_states(r: np.ndarray) -> np.ndarray:
    r = np.atleast_2d(r)
    return 0.5 * (
        np.eye(2)[None]
        + r[:, 0, None, None] * PAULI_X
        + r[:, 1, None, None] * PAULI_Y
        + r[:, 2, None, None] * PAULI_Z
    )


def appendix_b_solution(params: AppendixBParams, t: float) -> DensityMatrix:
    if t < 0:
        raise ValueError("t must be >= 0")
    return validate_density(_bloch_to_states(appendix_b_bloch(params, t))[0])


def appendix_b_trajectory(params: AppendixBParams, tau: float, grid_points: int = 257) -> Trajectory:
    gen = appendix_b_generator(params)

    def evaluate(times):
        states = _bloch_to_states(appendix_b_bloch(params, times))
        return states, gen(None, states)

    return _closed_form_trajectory(
        evaluate,
        tau,
        grid_points,
        "appendix-b",
        {"theta": params.theta, "omega_l": params.omega_l, "gamma": params.gamma, "r0": list(params.r0)},
    )


def appendix_b_initial(params: AppendixBParams) -> np.ndarray:
    return _bloch_to_states(np.array(params.r0))[0]


# --------------------------------------------------------------------------- #
# Unitary and bipartite dynamics
# --------------------------------------------------------------------------- #


def unitary_trajectory(hamiltonian, rho0, tau: float, grid_points: int = 257) -> Trajectory:
    """``rho_t = U_t rho0 U_t^dagger`` with ``U_t = exp(-i H t)``."""
    h = as_matrix(hamiltonian)
    rho = as_matrix(rho0)
    energies, vecs = np.linalg.eigh(h)
    rho_eig = vecs.conj().T @ rho @ vecs

    def evaluate(times):
        phase = np.exp(-1j * np.outer(times, energies))
        inner = phase[:, :, None] * rho_eig[None] * phase.conj()[:, None, :]
        states = vecs[None] @ inner @ vecs.conj().T[None]
        states = 0.5 * (states + _dagger(states))
        return states, -1j * _commutator(h, states)

    return _closed_form_trajectory(evaluate, tau, grid_points, "unitary")


def bipartite_trajectory(
    hamiltonian, rho_s, rho_e, tau: float = 1.0, grid_points: int = 256, meta: dict | None = None
) -> Trajectory:
    """Reduced dynamics ``Tr_E(U_t rho_S (x) rho_E U_t^dagger)`` of a qubit-sized system."""
    h = as_matrix(hamiltonian)
    s, e = as_matrix(rho_s), as_matrix(rho_e)
    dims = (s.shape[0], e.shape[0])
    if h.shape[0] != dims[0] * dims[1]:
        raise ValueError(f"Hamiltonian dimension {h.shape[0]} != {dims[0]}x{dims[1]}")
    joint = np.kron(s, e)
    energies, vecs = np.linalg.eigh(h)
    rho_eig = vecs.conj().T @ joint @ vecs

    def evaluate(times):
        phase = np.exp(-1j * np.outer(times, energies))
        inner = phase[:, :, None] * rho_eig[None] * phase.conj()[:, None, :]
        full = vecs[None] @ inner @ vecs.conj().T[None]
        full_dot = -1j * _commutator(h, full)
        reduced = partial_trace_array(full, dims, 0)
        reduced_dot = partial_trace_array(full_dot, dims, 0)
        reduced = 0.5 * (reduced + _dagger(reduced))
        reduced_dot = 0.5 * (reduced_dot + _dagger(reduced_dot))
        return reduced, reduced_dot

    info = {"initial_purity": purity(s)}
    info.update(meta or {})
    return _closed_form_trajectory(evaluate, tau, grid_points, "bipartite", info)


def bipartite_sample(
    seed: Seed, tau: float = 1.0, grid_points: int = 256, diagonal_h: bool = True
) -> Trajectory:
    """Random two-qubit unitary dynamics reduced to the first qubit.

    One generator seeded by ``seed`` draws, in order, the 4x4 Hamiltonian,
    ``rho_S`` and ``rho_E``.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")
    rng = _rng(seed)
    h = random_hamiltonian(4, diagonal_h, rng)
    rho_s = random_density(2, seed=rng)
    rho_e = random_density(2, seed=rng)
    meta = {"seed": seed if isinstance(seed, int) else None, "diagonal_h": diagonal_h}
    return bipartite_trajectory(h, rho_s, rho_e, tau, grid_points, meta)
