"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run or mutation configuration value is outside its domain."""


class DataError(ValueError):
    """A dataset could not be loaded or failed validation."""
