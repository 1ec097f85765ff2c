"""Exception and warning types shared across the package."""


class DimensionError(ValueError):
    """Operator or layout dimensions are invalid or do not match."""


class NonHermitianError(ValueError):
    """An operator that must be Hermitian is not, within tolerance."""

    def __init__(self, deviation, tolerance, what="operator"):
        self.deviation = float(deviation)
        self.tolerance = float(tolerance)
        super().__init__(
            f"{what} is not Hermitian: relative Frobenius deviation "
            f"{self.deviation:.3e} exceeds {self.tolerance:.1e}"
        )


class ConvergenceError(RuntimeError):
    """An iterative routine did not converge."""

    def __init__(self, message, iterations=None, best=None):
        self.iterations = iterations
        self.best = best
        super().__init__(message)


class SingularSystemError(RuntimeError):
    """The trace-constrained steady-state system is singular."""


class PhysicsInputError(ValueError):
    """Inputs are outside the physically meaningful domain."""


class TruncationWarning(UserWarning):
    """The top level of a truncated subsystem carries noticeable population."""


class GridPointError(RuntimeError):
    """A spectroscopy cell failed; carries its coordinates and the cause."""

    def __init__(self, flux, omega_d, cause):
        self.flux = flux
        self.omega_d = omega_d
        self.cause = cause
        super().__init__(
            f"at flux={flux!r}, omega_d={omega_d!r}: {type(cause).__name__}: {cause}"
        )
