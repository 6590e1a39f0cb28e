"""Exception and warning types shared across the toolkit."""


class EvikitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(EvikitError):
    """Input arrays have inconsistent shapes or non-finite entries."""


class NumericalFailure(EvikitError):
    """An iterative routine stalled or exceeded its iteration cap."""


class Infeasible(EvikitError):
    """A constraint system is empty; carries a Farkas certificate when available."""

    def __init__(self, message, farkas=None):
        super().__init__(message)
        self.farkas = farkas


class Unbounded(EvikitError):
    """A linear program diverges along a feasible ray."""


class TooLarge(EvikitError):
    """A desk-scale guard was exceeded (e.g. vertex enumeration size limits)."""


class DomainError(EvikitError):
    """A point lies outside the operator's domain, or a parameter is out of range."""


class StructureViolation(EvikitError):
    """Input data does not satisfy a required structural property."""


class NoFixedPointFound(EvikitError):
    """Fixed-point extraction failed numerically for a verified endomorphism."""


class CertificateNotFound(EvikitError):
    """The mixing-weight program could not certify the target accuracy."""


class IterationCapExceeded(EvikitError):
    """A solver hit its iteration budget before meeting its termination test."""


class ParseError(EvikitError):
    """A JSON input file does not match the documented schema."""


class InvariantViolation(EvikitError):
    """A loaded object fails one of its type invariants."""


class DegenerateRowWarning(UserWarning):
    """An all-zero constraint row was dropped at load."""


class PreconditionUnverified(UserWarning):
    """A result was computed under an unverified precondition and is advisory only."""
