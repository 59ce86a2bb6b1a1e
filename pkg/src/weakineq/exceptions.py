"""Exception hierarchy shared by all modules."""


class WeakIneqError(Exception):
    """Base class for every error raised by this package."""


class NonFinitePotential(WeakIneqError, ValueError):
    pass


class MassDeficit(WeakIneqError):
    """Truncated probability mass exceeds tolerance; widen the domain."""

    def __init__(self, deficit, message=None):
        self.deficit = deficit
        super().__init__(
            message
            or f"truncated tail mass ~{deficit:.3e} exceeds 1e-6; use a wider domain"
        )


class OutOfDomain(WeakIneqError, ValueError):
    pass


class NegativeInput(WeakIneqError, ValueError):
    pass


class AtMedian(WeakIneqError, ValueError):
    pass


class InsufficientRange(WeakIneqError, ValueError):
    pass


class DivergentBound(WeakIneqError):
    pass


class ZeroDerivative(WeakIneqError, ValueError):
    pass


class PremiseViolated(WeakIneqError):
    pass


class PremiseWarning(UserWarning):
    """Warning-grade premise violation (the computation still returns)."""


class NotInvertible(WeakIneqError, ValueError):
    pass


class ShapeViolation(WeakIneqError, ValueError):
    pass


class UnsupportedKind(WeakIneqError, ValueError):
    pass


class DerivativeMissing(WeakIneqError, ValueError):
    pass


class TailIntegralDiverges(WeakIneqError):
    pass


class TimeOutOfRange(WeakIneqError, ValueError):
    pass


class Instability(WeakIneqError):
    pass


class NoCertificate(WeakIneqError, ValueError):
    pass


class DegenerateFamily(WeakIneqError, ValueError):
    pass


class ConfigError(WeakIneqError, ValueError):
    pass
