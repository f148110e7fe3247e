"""Exception types shared across the package."""


class GoppError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(GoppError):
    """Operands have incompatible shapes."""


class InvalidSpec(GoppError):
    """A signal specification violates its invariants."""


class NoSpectralGap(GoppError):
    """The d-th and (d+1)-th singular values are numerically indistinguishable."""


class NotSymmetric(GoppError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class NotConverged(GoppError):
    """An iterative routine stopped before reaching its tolerance."""


class MalformedInstanceFile(GoppError):
    """An instance file does not follow the v1 format.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
