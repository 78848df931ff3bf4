"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class KexprError(Exception):
    """Base class for all package errors."""


class ConfigError(KexprError):
    """Bad configuration: unknown key, malformed value, invalid parameter."""


class DataError(KexprError):
    """Bad dataset: malformed CSV, degenerate target, impossible split."""


class ExprParseError(KexprError):
    """Malformed infix expression text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
