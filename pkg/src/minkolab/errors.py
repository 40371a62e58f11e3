"""Exception types shared across the engines."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (e.g. |beta| >= 1)."""


class OutOfRangeError(ValueError):
    """A proper-time query falls outside a worldline's sampled range."""


class InsufficientHistoryError(LookupError):
    """A light-cone intersection lies outside the recorded history.

    Carries the required and available proper-time depths when known.
    """

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class RootFindingError(ArithmeticError):
    """The light-cone root search failed to meet its residual tolerance."""


class SingularityError(ArithmeticError):
    """The retarded distance R.u vanished; the point-charge field diverges."""


class CollisionError(RuntimeError):
    """Two particles came closer than the configured minimum separation."""


class OracleFailure(RuntimeError):
    """The regularized quadrature did not converge."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or fails validation."""
