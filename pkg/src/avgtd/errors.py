"""Exception types shared across the package."""


class AvgTDError(Exception):
    """Base class for all errors raised by avgtd."""


class ParameterError(AvgTDError, ValueError):
    """An argument is outside its allowed range or has the wrong shape."""


class StructuralError(AvgTDError):
    """The problem itself is degenerate (reducible chain, rank-deficient features, ...)."""
