"""Exception hierarchy shared by every module."""


class MMD2Error(Exception):
    """Base class for errors raised by this package."""


class DomainError(MMD2Error, ValueError):
    """Arguments outside the mathematical domain (negative times, unstable load)."""


class ConfigError(MMD2Error, ValueError):
    """Structurally invalid configuration, e.g. a truncation level that is too small."""


class MisuseError(MMD2Error, ValueError):
    """A routine called on a model it does not cover (e.g. mu1 != mu2 for the homogeneous solver)."""


class NumericalError(MMD2Error, ArithmeticError):
    """A linear solve or closed form failed its numerical self-check."""
