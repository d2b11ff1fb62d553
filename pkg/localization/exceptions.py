"""
Error hierarchy for the localization app.

Every failure raised by the numeric modules derives from LocalizationError so
management commands and API views can catch one type and report it.
"""


class LocalizationError(Exception):
    """Base class for every error raised by the localization app."""


class ContractViolation(LocalizationError, ValueError):
    """A caller broke an operation precondition (bad index, empty input, unknown tag)."""


class SingularGeometryError(LocalizationError):
    """An emitter/waypoint distance is zero, so the path-loss model is undefined."""


class DegenerateLikelihoodError(LocalizationError):
    """Zero noise variance combined with a nonzero residual."""


class RankDeficientFusionError(LocalizationError):
    """The information matrices needed by a fusion rule cannot be inverted."""


class RankDeficientSolveError(LocalizationError):
    """The Gauss-Newton normal matrix is singular and no damping was applied."""


class UnobservableGeometryError(LocalizationError):
    """The total Fisher information is singular or too ill-conditioned to invert."""


class ConfigurationError(LocalizationError):
    """Invalid scenario, protocol or experiment configuration."""


class HarnessIOError(LocalizationError):
    """Reading or writing an experiment artifact failed."""

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")
