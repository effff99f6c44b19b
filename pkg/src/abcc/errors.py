"""Exception types raised across the package."""


class AbccError(Exception):
    """Base class for all errors raised by abcc."""


class UnknownRelation(AbccError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ArityMismatch(AbccError, ValueError):
    pass


class UnsafeVariable(AbccError, ValueError):
    pass


class ConstraintSyntaxError(AbccError, SyntaxError):
    """Parse failure in a constraint file; carries 1-based line and column."""

    def __init__(self, message, line=None, column=None, text=None):
        self.message = message
        self.line = line
        self.column = column
        self.text = text
        super().__init__(message)
        self.lineno, self.offset = line, column

    def __str__(self):
        if self.line is None:
            return self.message
        return f"line {self.line}, column {self.column}: {self.message}"


class UnknownCandidate(AbccError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidElection(AbccError, ValueError):
    pass


class InvalidRule(AbccError, ValueError):
    pass


class ModelMismatch(AbccError, ValueError):
    pass


class InstanceTooLarge(AbccError, ValueError):
    pass


class PatternViolation(AbccError, ValueError):
    pass


class InputFormatError(AbccError, ValueError):
    """Malformed input file; message names the file and line."""
