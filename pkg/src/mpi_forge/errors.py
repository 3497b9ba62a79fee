"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1, FormatError -> 2.
Check failures (gradient checks) are reported by return value, not exceptions.
"""


class MpiForgeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MpiForgeError):
    """Invalid configuration, parameters, or edit scripts."""


class FormatError(MpiForgeError):
    """Malformed or truncated file content.

    Every reader failure is reported through this type so callers can
    distinguish bad bytes from programming errors. The message states
    which contract was violated (magic, truncation, dimensions, ...).
    """
