"""Exception types shared across the package."""


class KFactorError(Exception):
    """Base class for all package errors."""


class InputFormatError(KFactorError, ValueError):
    """Malformed edge list or sidecar file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(KFactorError, ValueError):
    """Two graphs (or a graph and a vertex set) live on different vertex sets."""


class SizeLimitError(KFactorError, ValueError):
    """A desk-scale size cap was exceeded."""


class ParameterError(KFactorError, ValueError):
    """Parameters outside the documented domain."""


class ConstructionError(KFactorError, RuntimeError):
    """A randomized construction ran out of retries."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RejectedInput(KFactorError, ValueError):
    """The input violates a precondition of a procedure (e.g. a minimum-degree bound)."""
