"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage/config errors exit 2,
IO/format errors exit 3, failed checks exit 1.
"""


class GazemoError(Exception):
    """Base class for all package errors."""


class DimensionError(GazemoError, ValueError):
    """Shapes of the operands are incompatible."""


class ArgumentError(GazemoError, ValueError):
    """An argument violates a documented precondition."""


class ContractError(GazemoError):
    """An internal contract was violated (e.g. non-scalar loss, missing grad)."""


class FormatError(GazemoError):
    """A file does not conform to its binary/text format.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(GazemoError):
    """Configuration is inconsistent (bad variant, missing checkpoint, ...)."""
