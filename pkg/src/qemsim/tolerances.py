"""Numerical tolerances used throughout the package.

All checks read from :data:`DEFAULT`; callers may pass a modified copy
(``dataclasses.replace(DEFAULT, steady_residual=1e-10)``) where a function
accepts ``tol=``.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    trace_preservation: float = 1e-10
    steady_residual: float = 1e-8
    state_trace: float = 1e-10
    state_hermiticity: float = 1e-10
    positivity: float = 1e-8
    truncation_population: float = 1e-3
    eig_residual: float = 1e-9
    gmres_rtol: float = 1e-11


DEFAULT = Tolerances()
