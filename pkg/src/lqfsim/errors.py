"""Exception hierarchy shared across the package.

Configuration problems (bad parameters, malformed experiment files) and
numerical-domain problems (values outside a formula's supported region) are
kept distinct because the command-line tool maps them to different exit codes.
"""


class LqfError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(LqfError, ValueError):
    """Invalid parameters, invalid state, or a malformed experiment spec."""


class StateSpaceError(ConfigurationError):
    """Truncated state space would exceed the supported size."""


class NumericalDomainError(LqfError, ValueError):
    """Input outside the numerical domain an operation supports."""


class BranchUnsupportedError(NumericalDomainError):
    """Closed form requested on an initial-condition branch it does not cover."""


class InterpolationError(NumericalDomainError):
    """A requested time is not on the recorded grid and interpolation is refused."""
