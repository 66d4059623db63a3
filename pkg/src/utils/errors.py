"""
Exception hierarchy for the Choquard solver.

Validation errors (bad configuration, parameters outside the theory's
regime, unmet penalization hypotheses) map to exit code 2; everything that
goes wrong while computing maps to exit code 1.
"""


class ChoquardError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


# Validation family

class ConfigError(ChoquardError):
    """Configuration file or override could not be validated."""

    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ParameterError(ChoquardError, ValueError):
    """A numerical parameter is outside its admissible range."""

    exit_code = 2


class RegimeError(ChoquardError):
    """The limiting problem has no ground state for (N, alpha, p)."""

    exit_code = 2


class HypothesisError(ChoquardError):
    """A penalization construction hypothesis fails for the configured problem."""

    exit_code = 2


class GeometryError(ChoquardError):
    """Regions or barrier balls violate a containment requirement."""

    exit_code = 2


# Runtime family

class GridMismatchError(ChoquardError, ValueError):
    """Two fields (or a field and a kernel) live on different grids."""


class BoundaryDecayError(ChoquardError):
    """A field does not decay in the boundary layer (strict mode only)."""


class ResolutionError(ChoquardError):
    """A resampled profile is not resolved by the target grid."""


class SolverError(ChoquardError):
    """Generic solver failure."""


class CollapseError(SolverError):
    """The iteration flowed into the trivial critical point u = 0."""


class ConvergenceError(SolverError):
    """The iteration stopped before reaching the residual tolerance."""


class DiagnosticsError(ChoquardError):
    """A diagnostic was requested on inputs it cannot be evaluated on."""
