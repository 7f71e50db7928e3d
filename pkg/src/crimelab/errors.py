class CrimeLabError(Exception):
    """Base class for every error raised by crimelab."""


class SchemaError(CrimeLabError):
    """Input columns or codes do not match what the pipeline expects."""


class DataError(CrimeLabError):
    """The data itself cannot be processed (empty, degenerate, unreadable)."""


class ConfigError(CrimeLabError):
    """A run configuration failed validation."""


class TrainingError(CrimeLabError):
    """Model fitting could not produce a usable model."""
