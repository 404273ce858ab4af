"""Exception hierarchy shared by the solver, kernels, and command line.

Each leaf class maps to a distinct process exit code so that scripted
callers can tell configuration mistakes from numerical failures.
"""


class MaxstopError(Exception):
    """Base class for all package-specific failures."""

    exit_code = 1


class ConfigError(MaxstopError):
    """Invalid configuration: bad flag value, malformed config file, bad field."""

    exit_code = 2


class MismatchError(MaxstopError):
    """Artifacts that must agree do not (e.g. a boundary table solved for a
    different problem than the one being evaluated)."""

    exit_code = 3


class BracketingError(MaxstopError):
    """A root is known to exist (sign change or theory guarantee) but the
    bracketing search failed to isolate it."""

    exit_code = 4


class ToleranceError(MaxstopError):
    """A quadrature or iteration finished without reaching its tolerance."""

    exit_code = 5
