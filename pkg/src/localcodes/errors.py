"""Exception hierarchy, grouped by the CLI exit code each family maps to."""


class LocalCodesError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(LocalCodesError):
    """Caller error: bad arguments, mismatched shapes, unknown names. Exit 1."""


class ConfigError(LocalCodesError):
    """Invalid configuration values or inconsistent parameter combinations. Exit 2."""


class DataError(LocalCodesError):
    """Malformed or corrupt data files. Exit 2."""


class GenerationError(LocalCodesError):
    """Dataset construction could not satisfy its constraints. Exit 2."""


class TrainingError(LocalCodesError):
    """Training diverged or could not proceed. Exit 3."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class FitError(LocalCodesError):
    """Curve fitting failed (degenerate design, too few points). Exit 3."""
