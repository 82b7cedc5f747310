"""Exception types shared across the package."""


class MlamrError(Exception):
    """Base class for all package errors."""


class ConfigError(MlamrError):
    """Invalid or unknown configuration input; carries the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class NotRefinedError(MlamrError):
    """A coarse cell has no finer patch covering it."""


class GeometryError(MlamrError):
    """Patch geometry is inconsistent (box outside available data footprint)."""


class TimeSyncError(MlamrError):
    """Levels are not at the same simulation time when they must be."""


class CflViolationError(MlamrError):
    """Observed wave speed times dt/dx exceeded 1."""


class NumericalAbortError(MlamrError):
    """Non-finite state detected; the run cannot continue."""


class FrameFormatError(MlamrError):
    """Frame file is malformed or has an unsupported format version."""
