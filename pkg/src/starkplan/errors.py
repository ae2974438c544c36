"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the region where a model is defined."""


class UnreachableError(DomainError):
    """Requested shift cannot be produced inside the valid voltage range."""


class ModelValidityError(DomainError):
    """A model evaluates to an unphysical value (e.g. non-positive linewidth)."""


class FitError(RuntimeError):
    """Least-squares fit failed to converge or is not identifiable.

    ``best`` carries the best-so-far parameter vector (or None).
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class ParseError(DomainError):
    """Malformed input file; the message carries file, line and column."""
