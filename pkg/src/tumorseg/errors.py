"""Exception types shared across the package."""


class TumorSegError(Exception):
    """Base class for all package errors."""


class ParameterError(TumorSegError, ValueError):
    """An argument is outside the domain an operation accepts."""


class FormatError(TumorSegError, ValueError):
    """A file exists but is not in a supported image format or bit depth."""


class EmptyBoundaryError(TumorSegError, ValueError):
    """A mask has no boundary pixels, so boundary distances are undefined."""
