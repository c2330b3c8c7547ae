class CSDetectError(Exception):
    """Base class for all errors raised by csdetect."""


class ValidationError(CSDetectError, ValueError):
    """Input data or configuration violates a documented invariant."""


class FormatError(ValidationError):
    """A text file could not be parsed.

    Carries the source name and 1-based line number when known so that
    command-line diagnostics can point at the offending line.
    """

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class NoCrossingError(CSDetectError):
    """The two miss-rate series never cross inside the swept weight range."""
