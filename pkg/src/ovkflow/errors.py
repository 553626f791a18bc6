"""Exception hierarchy shared across the library.

The CLI maps these onto process exit codes: bad inputs exit 1,
numerical failures exit 2.
"""


class OvkError(Exception):
    """Base class for all library errors."""


class InputError(OvkError):
    """Invalid argument, malformed file, or inconsistent configuration."""

    exit_code = 1


class UnsupportedError(InputError):
    """Requested a combination the library deliberately does not provide."""


class NumericalError(OvkError):
    """A numerical routine could not meet its accuracy contract."""

    exit_code = 2
