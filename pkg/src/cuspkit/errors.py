"""Exception hierarchy shared by all cuspkit modules."""


class CuspkitError(Exception):
    """Base class for every error raised by cuspkit."""


class GeometryError(CuspkitError, ValueError):
    """Invalid nuclear geometry or a grid that leaves the admissible ball."""


class DomainError(CuspkitError, ValueError):
    """An argument outside the mathematical domain of an operation."""


class CuspRangeError(CuspkitError, ArithmeticError):
    """An exponent too large to evaluate without overflow."""


class SingularPointError(CuspkitError, ValueError):
    """Evaluation requested exactly at a Coulomb singularity."""


class SchemeError(CuspkitError, ValueError):
    """Quadrature scheme incompatible with the wavefunction model."""


class EvaluationError(CuspkitError, ArithmeticError):
    """A user handle produced NaN or infinite values."""


class FitError(CuspkitError, ArithmeticError):
    """Radial fit could not be performed reliably."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class ConfigurationError(CuspkitError, ValueError):
    """Unsupported quadrature degree, aliasing, or bad run configuration."""


class HypothesisError(CuspkitError, ValueError):
    """An identity was requested for a model that does not meet its hypotheses."""
