"""Exception types shared across the package."""


class LfgtError(Exception):
    """Base class for all toolkit errors."""


class InputFormatError(LfgtError):
    """Raised when an on-disk light field or metadata file is malformed."""


class BitstreamError(LfgtError):
    """Raised when a coded stream is truncated, corrupt or incompatible."""


class GraphSizeError(LfgtError):
    """Raised when a graph is too large for dense eigendecomposition."""
