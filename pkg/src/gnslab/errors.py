"""Exception types shared across the package."""


class GnslabError(Exception):
    """Base class for all library errors."""


class StructureError(GnslabError):
    """Shapes, block layouts or file schemas do not line up."""


class PreconditionError(GnslabError):
    """An operation was called on inputs outside its contract."""


class DomainError(GnslabError):
    """A scalar parameter lies outside its admissible range."""


class ClosureError(GnslabError):
    """A product or involution left the declared span.

    Carries the residual of the failed least-squares expansion so callers
    can report how far outside the span the result landed.
    """

    def __init__(self, message: str, residual: float | None = None, witness=None):
        super().__init__(message)
        self.residual = residual
        self.witness = witness


class InternalInconsistencyError(GnslabError):
    """A derived identity failed.

    Raised when a property that is a theorem for validated inputs does not
    hold numerically; signals a bug upstream, not bad user input.
    """
