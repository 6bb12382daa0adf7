"""Exception types shared across the package."""


class ZonefuseError(Exception):
    """Base class for all package errors."""


class ConfigError(ZonefuseError):
    """Fatal configuration problem (missing column, malformed config file)."""


class ZoneFileError(ZonefuseError):
    """Zone geometry file is unreadable or contains degenerate polygons."""


class SolverError(ZonefuseError):
    """The ADMM solver hit a numerical failure (non-finite iterate)."""


class PipelineError(ZonefuseError):
    """A pipeline stage failed fatally; the message names the stage."""


class SampleRejection(ZonefuseError):
    """A single metric sample was rejected. Carries a short reason code."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
