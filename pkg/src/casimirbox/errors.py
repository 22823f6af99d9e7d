"""Exception hierarchy shared by every casimirbox module."""


class CasimirError(Exception):
    """Base class for all library errors."""


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain of the operation."""


class ExtrapolationError(DomainError):
    """A tabulated model was queried outside its grid."""


class ValidationError(CasimirError, ValueError):
    """Input data or configuration failed validation.

    ``key`` names the offending field when one can be identified.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ParseError(ValidationError):
    """A data file could not be parsed; ``line`` is 1-based."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, key=key)
        self.line = line


class ConvergenceError(CasimirError, ArithmeticError):
    """A numerical procedure did not reach its tolerance within budget.

    The best available estimate and its achieved error are attached so that
    callers can still report something useful.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf"), evaluations=0, ladder=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.evaluations = evaluations
        self.ladder = ladder


class MissedModesError(ConvergenceError):
    """Root bracketing found a mode count inconsistent with the Weyl estimate."""


class DegenerateSequenceError(ConvergenceError):
    """Richardson elimination hit a (near) singular triple."""

    def __init__(self, message, indices):
        super().__init__(f"{message} (indices {tuple(indices)})")
        self.indices = tuple(indices)
