"""Exception types raised by the solver."""


class EtdgError(Exception):
    """Base class for all solver errors."""


class DomainError(EtdgError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class UnsupportedDegreeError(DomainError):
    pass


class MeshError(EtdgError):
    """Raised when a mesh is malformed (nonconforming, untagged, inverted)."""


class AssemblyError(EtdgError):
    pass


class ConfigError(EtdgError):
    pass


class DivergenceError(EtdgError):
    """Non-finite values appeared in the state.

    ``state`` holds the last finite state (if known) and ``step`` the
    index of the step that failed.
    """

    def __init__(self, message, step=None, state=None, t=None):
        super().__init__(message)
        self.step = step
        self.state = state
        self.t = t


class KrylovAccuracyError(EtdgError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(EtdgError):
    """Nonlinear (Newton) iteration failed to converge."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)
