"""Error types, grouped by how the command line maps them to exit codes."""


class ToalabError(Exception):
    """Base class for all package errors."""


class ValidationError(ToalabError, ValueError):
    """An input violates a declared invariant (config, matrix flags, grids)."""


class NumericalError(ToalabError, RuntimeError):
    """A computation hit a singular or otherwise unusable numerical regime."""


class SingularKernelError(NumericalError):
    """A detector kernel was evaluated at a singular momentum pair."""


class WindowError(NumericalError):
    """An integration window is too narrow for the requested tolerance."""


class NoPeakError(NumericalError):
    """A spectral fit found no oscillation peak above the noise floor."""
