"""Exception hierarchy shared across the package."""


class AdaptNetError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AdaptNetError):
    """Malformed, inconsistent, or out-of-domain configuration input."""


class UnsupportedInputError(AdaptNetError):
    """Structurally valid input outside the domain an operation supports."""


class NotDiagonalizableError(UnsupportedInputError):
    """Combination matrix failed the diagonalizability conditioning check."""


class StabilityError(AdaptNetError):
    """Operation requires a stable configuration and the input is not."""


class NumericalError(AdaptNetError):
    """An iterative numerical procedure failed to converge."""
