"""Exception hierarchy shared across the package.

Everything raised deliberately derives from QAError so the CLI can map
domain failures to exit code 1 and usage failures to exit code 2.
"""


class QAError(Exception):
    """Base class for all domain errors."""


class ParseError(QAError):
    """A data file line does not match its declared format."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class IntegrityError(QAError):
    """Loaded data violates a cross-record invariant."""


class TaggingError(QAError):
    """No alias of a question's subject aligns with its tokens."""


class UsageError(QAError):
    """Bad command-line or config input."""
