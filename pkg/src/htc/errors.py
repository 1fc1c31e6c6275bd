"""Shared exception types."""


class HtcError(Exception):
    """Base class for every error raised by this package."""


class ParseError(HtcError):
    """Syntax or declaration error in source text, with a 1-based position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class DomainError(HtcError):
    """Invalid domain declaration, or use of a variable outside its role."""


class BudgetError(HtcError):
    """Enumeration would exceed the configured interpretation budget."""


class FreshNameError(HtcError):
    """A generated auxiliary name collides with a declared variable."""


class TransformError(HtcError):
    """A transformation precondition does not hold."""
