"""Exception types shared across the package."""


class RefballError(Exception):
    """Base class for package errors."""


class DomainError(RefballError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(RefballError, ValueError):
    """Argument outside the supported numerical envelope."""


class GeometryError(RefballError, ValueError):
    """Invalid or degenerate geometry."""


class PreconditionError(RefballError, ValueError):
    """An operation was called on inputs that violate its preconditions."""


class ConvergenceError(RefballError, RuntimeError):
    """A series or iteration failed to converge."""


class NumericalError(RefballError, RuntimeError):
    """Singular system or other numerical breakdown."""


class AccuracyError(RefballError, ValueError):
    """Requested evaluation lies outside the region of guaranteed accuracy."""


class ResolutionError(RefballError, RuntimeError):
    """Phase-sign resolution impossible (e.g. a fully masked direction)."""


class ObjectiveError(RefballError, RuntimeError):
    """The forward model could not be evaluated at a parameter point."""


class ClassificationError(RefballError, RuntimeError):
    """No boundary-condition hypothesis could be fitted."""
