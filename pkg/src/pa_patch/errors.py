"""Exception hierarchy shared by every module."""


class PatchError(Exception):
    """Base class for all errors raised by pa_patch."""


class RejectedInputError(PatchError, ValueError):
    """An argument violates an operation's precondition."""


class NumericalError(PatchError, ArithmeticError):
    """A computation produced a non-finite intermediate."""


class UndefinedMetricError(PatchError, ValueError):
    """A metric is undefined for the given input (e.g. one class only)."""


class FormatError(PatchError, ValueError):
    """A file could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class VersionError(FormatError):
    """A file carries a format tag this build does not understand."""


class LockError(PatchError):
    """Another writer holds the local FP database lock."""
