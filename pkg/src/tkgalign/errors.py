"""Exception types shared across the package."""


class AlignError(Exception):
    """Base class for all errors raised by tkgalign."""


class ArgumentError(AlignError, ValueError):
    """An argument violates an operation's precondition."""


class IngestError(AlignError, OSError):
    """A dataset file is missing or unreadable."""


class ParseError(AlignError, ValueError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class ValidationError(AlignError, ValueError):
    """Ids or seed pairs fall outside the vocabularies they index."""


class DegenerateGraphError(AlignError, ArithmeticError):
    """A graph has a zero self-kernel, so normalization is undefined."""
