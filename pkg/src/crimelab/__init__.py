"""crimelab: crime-category classification lab for the Denver incident schema."""

from crimelab.errors import ConfigError, CrimeLabError, DataError, SchemaError

__version__ = "0.1.0"

__all__ = ["ConfigError", "CrimeLabError", "DataError", "SchemaError", "__version__"]
