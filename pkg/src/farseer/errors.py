"""Exception hierarchy shared by all farseer modules.

The CLI maps these onto process exit codes: config problems exit 2, file
format problems exit 3, numeric failures (NaN/Inf) exit 4.
"""


class FarseerError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(FarseerError):
    """Invalid configuration: bad hyperparameters, incompatible geometry."""

    exit_code = 2


class DimensionError(ConfigError):
    """Shape mismatch between tensors; message names the offending axes."""


class UsageError(ConfigError):
    """API misuse: backward on a non-scalar, missing gradients, etc."""


class DataFormatError(FarseerError):
    """Corrupt or truncated binary file; carries the failing byte offset."""

    exit_code = 3

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericError(FarseerError):
    """Non-finite value produced where finite values are required."""

    exit_code = 4
