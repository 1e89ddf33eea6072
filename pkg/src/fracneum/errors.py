"""Exception taxonomy shared by all modules.

Every error message names the offending parameter, field or module so that
CLI users can trace a failure back to their configuration.
"""


class FracneumError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(FracneumError, ValueError):
    """A scalar argument is out of its admissible range."""


class DomainError(FracneumError, ValueError):
    """Geometric inputs violate an operation's domain restrictions."""


class BindingError(FracneumError, ValueError):
    """A grid function is used with a mesh or weight set it does not belong to."""


class ConfigurationError(FracneumError, ValueError):
    """A problem configuration is inconsistent or incomplete."""


class ConnectivityError(FracneumError, ValueError):
    """The weight graph does not couple some exterior cell to the interior."""


class GeometryError(FracneumError, RuntimeError):
    """A variational geometry precheck failed (no energy barrier found)."""


class UnsupportedModeError(FracneumError, ValueError):
    """The requested operation is only available in a restricted mode (e.g. p = 2)."""


class DivergenceError(FracneumError, RuntimeError):
    """An iteration produced a non-finite energy; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
