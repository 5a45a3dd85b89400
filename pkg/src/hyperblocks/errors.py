"""Exception types shared across the package."""


class HyperblockError(Exception):
    """Base class for all package errors."""


class DataError(HyperblockError, ValueError):
    """Malformed input data (bad CSV cell, ragged row, dimension mismatch)."""


class ModelFormatError(HyperblockError, ValueError):
    """A model document failed schema, version or invariant checks."""


class ConfigError(HyperblockError, ValueError):
    """Invalid configuration value or combination."""


class InputIOError(HyperblockError, OSError):
    """A file could not be opened or read."""
