"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ParseError -> 2, ContractViolation -> 3.
Anything else is a bug.
"""


class HierkitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(HierkitError):
    """Malformed input file content."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ContractViolation(HierkitError):
    """An operation was invoked outside its documented preconditions."""


class StructureError(ContractViolation):
    """The class hierarchy is structurally unusable (cycle, no root)."""
