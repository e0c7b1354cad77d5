"""Exception hierarchy.

Validation problems (bad input states) and numerical failures (integrator
drift, rate poles) are kept apart so the CLI can map them to different exit
codes.
"""

from __future__ import annotations


class QSLError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(QSLError, ValueError):
    pass


class DensityError(QSLError, ValueError):
    """A matrix failed one of the density-matrix invariants.

    ``violation`` carries the measured size of the violation.
    """

    invariant = "density"

    def __init__(self, violation: float, message: str | None = None):
        self.violation = float(violation)
        super().__init__(message or f"{self.invariant}: violation {self.violation:.3e}")


class NotHermitian(DensityError):
    invariant = "NotHermitian"


class TraceNotOne(DensityError):
    invariant = "TraceNotOne"


class NotPositive(DensityError):
    invariant = "NotPositive"


class NumericalError(QSLError, ArithmeticError):
    pass


class TraceDrift(NumericalError):
    def __init__(self, time: float, drift: float):
        self.time = time
        self.drift = drift
        super().__init__(f"trace drift {drift:.3e} at t={time:.6g}")


class PositivityLoss(NumericalError):
    def __init__(self, time: float, min_eig: float):
        self.time = time
        self.min_eig = min_eig
        super().__init__(f"min eigenvalue {min_eig:.3e} at t={time:.6g}")


class PoleAt(NumericalError):
    """Decay-rate denominator vanished (non-Markovian divergence)."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"decay rate diverges at t={time:.12g}")


class ArccosDomainError(NumericalError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"arccos argument {value!r} outside [-1, 1] beyond clamping window")


class InconsistentPath(NumericalError):
    """Zero path length but distinct endpoints."""


class ConfigError(QSLError, ValueError):
    pass
