"""Exception types shared across the package.

The CLI maps these to exit code 2 (bad data / bad files); anything the
argument parser rejects exits 1 instead.
"""


class DataError(ValueError):
    """Invalid values, shapes, or preconditions in user-supplied data."""


class FormatError(DataError):
    """Corrupt, truncated, or unrecognized binary file."""
