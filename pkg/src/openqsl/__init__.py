"""Quantum speed limits for open quantum systems.

The angle distance between normalized density matrices, its line element,
the resulting speed-limit bounds, model dynamics and geodesic detection.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    GeodesicCheck,
    dephasing_arc_closed_form,
    gad_arc_closed_form,
    geodesic_arc_closed_form,
    geodesic_path,
    is_geodesic,
    path_length,
    report,
    tau_e,
    tau_phi,
    tau_qsl,
)
from .core import (
    DensityMatrix,
    hs_inner,
    partial_trace,
    purity,
    random_density,
    random_hamiltonian,
    tensor,
    validate_density,
)
from .dynamics import (
    AppendixBParams,
    DephasingParams,
    GADParams,
    NonMarkovRate,
    ThermalKrausParams,
    Trajectory,
    integrate,
)
from .errors import (
    ConfigError,
    DensityError,
    NotHermitian,
    NotPositive,
    NumericalError,
    PoleAt,
    PositivityLoss,
    QSLError,
    TraceDrift,
    TraceNotOne,
)
from .metric import distance_d, distance_e, distance_phi, fidelity_gm, normalize, speed_d, speed_e

__all__ = [name for name in dir() if not name.startswith("_")]
