"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: config/usage problems exit 1,
data problems exit 2, runtime/numeric problems exit 3.
"""

from __future__ import annotations


class RegimecastError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(RegimecastError):
    """Invalid configuration value, unknown key, or unusable flag combination."""

    exit_code = 1


class DataError(RegimecastError):
    """Unreadable, malformed, or too-short input data."""

    exit_code = 2


class NumericError(RegimecastError):
    """Non-finite values or numerically impossible requests at runtime."""

    exit_code = 3


class PoolLimitError(RegimecastError):
    """Specialist pool exceeded its hard size limit."""

    exit_code = 3
