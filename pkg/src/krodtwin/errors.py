"""Exception hierarchy shared by every stage of the pipeline."""


class KrodError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(KrodError, ValueError):
    """Invalid parameters, grids or configuration files."""


class NumericalError(KrodError, ArithmeticError):
    """A computation produced a non-finite or ill-conditioned result."""


class RankDeficiencyError(NumericalError):
    """The requested rank exceeds what the data numerically supports."""


class OptimizerDivergenceError(NumericalError):
    """Training loss kept increasing instead of converging."""
