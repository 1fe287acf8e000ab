"""Exception types raised by the package."""


class DomainError(ValueError):
    """An argument lies outside the validity domain of a model or formula."""


class CalibrationError(RuntimeError):
    """A calibration root search failed to bracket a solution."""


class AnalysisError(RuntimeError):
    """A histogram cannot be analysed with the requested settings."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or violates an invariant."""
