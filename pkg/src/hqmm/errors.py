"""Exception types raised by the engine."""


class HqmmError(Exception):
    """Base class for all engine errors."""


class ValidationError(HqmmError, ValueError):
    """An input violates a structural invariant (Hermiticity, positivity, stochasticity...)."""


class DimensionError(ValidationError):
    """Operand dimensions do not match."""


class SizeLimitError(HqmmError):
    """A construction would exceed the supported matrix size."""


class NumericalIntegrityError(HqmmError, ArithmeticError):
    """A computed quantity that must be real (or bounded) is not, beyond tolerance."""


class StructureError(HqmmError):
    """A model does not have the structure an operation requires."""


class InfeasibleError(HqmmError):
    """An exhaustive search would be too large to run."""


class SchemaError(ValidationError):
    """A model or observation file does not match the expected schema.

    ``location`` is a dotted field path (``transitions[0].channel``) or ``line N``.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
