"""Exception hierarchy shared by all modules."""


class PsuStatError(Exception):
    """Base class for errors raised by psustat."""


class DomainError(PsuStatError, ValueError):
    """Input lies outside the domain of the operation (pole, circle, |z| >= 1)."""


class GeometryError(DomainError):
    """A contour or grid collides with a pole or the unit circle."""


class ConfigurationError(PsuStatError, ValueError):
    """Invalid preset, parameter range or configuration key."""


class PreconditionError(PsuStatError, ValueError):
    """A documented precondition on the inputs does not hold."""


class ResourceError(PsuStatError, RuntimeError):
    """An enumeration or convolution exceeded its element cap."""


class AccuracyError(PsuStatError, ArithmeticError):
    """A quadrature is too ill-conditioned to deliver a meaningful result."""


class EvaluationError(PsuStatError, ArithmeticError):
    """A function produced non-finite samples during quadrature."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius
