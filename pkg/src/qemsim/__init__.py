"""Steady-state simulation of a flux-tunable transmon coupled to a microwave cavity and a nanomechanical resonator."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DimensionError,
    GridPointError,
    NonHermitianError,
    PhysicsInputError,
    SingularSystemError,
    TruncationWarning,
)
from .lindblad import BathSpec, DrivenSteadyStateSolver, liouvillian, steady_state
from .opalg import HilbertLayout, QuantumOperator, Superoperator
from .params import DeviceParams, build_model
from .spectroscopy import (
    LinewidthModel,
    SweepGrid,
    fit_linewidth,
    population_trace,
    sweep,
)
from .tolerances import DEFAULT, Tolerances
from .transmon import TransmonParams, spectrum_at_flux

__all__ = [
    "__version__",
    "BathSpec",
    "ConvergenceError",
    "DEFAULT",
    "DeviceParams",
    "DimensionError",
    "DrivenSteadyStateSolver",
    "GridPointError",
    "HilbertLayout",
    "LinewidthModel",
    "NonHermitianError",
    "PhysicsInputError",
    "QuantumOperator",
    "SingularSystemError",
    "Superoperator",
    "SweepGrid",
    "Tolerances",
    "TransmonParams",
    "TruncationWarning",
    "build_model",
    "fit_linewidth",
    "liouvillian",
    "population_trace",
    "spectrum_at_flux",
    "steady_state",
    "sweep",
]
