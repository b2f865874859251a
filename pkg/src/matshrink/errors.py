"""Exception types shared across the package."""


class MatShrinkError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(MatShrinkError, ValueError):
    """Operands have incompatible shapes."""


class SingularGram(MatShrinkError):
    """X'X is singular or its condition exceeds the allowed bound."""


class NonConvergence(MatShrinkError):
    """An iterative eigensolver failed; indicates a bug or NaN input."""


class SingularPoint(MatShrinkError):
    """Evaluation requested at a point in the singular set of a density."""


class NonFiniteEvaluation(MatShrinkError):
    """A function evaluation returned NaN/Inf where a finite value is required."""


class ZeroColumn(MatShrinkError):
    """An observation column is identically zero."""


class RegimeViolation(MatShrinkError):
    """Operation requires n - p - 1 > 0 but the dimensions do not satisfy it."""


class Unsupported(MatShrinkError):
    """The requested combination (e.g. SURE of a Bayes estimator) is not provided."""


class LowESSWarning(UserWarning):
    """Importance sampling effective sample size fell below the configured floor."""
