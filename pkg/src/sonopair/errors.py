"""Exception taxonomy shared across the toolkit.

ConfigError maps to CLI exit code 2, DataError to exit code 3.
"""


class ToolkitError(Exception):
    """Base class for all toolkit-raised errors."""


class ConfigError(ToolkitError):
    """Invalid parameters, presets, or configuration documents."""


class UndersampledError(ConfigError):
    """Sample rate too low for the requested center frequency."""


class DataError(ToolkitError):
    """Missing, malformed, or mutually inconsistent input data."""


class DegenerateRegionError(DataError):
    """A statistic is undefined for the supplied region (e.g. zero noise std)."""
