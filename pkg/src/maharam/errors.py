"""Exception hierarchy shared by every module.

Each exception carries a short machine-readable ``kind`` that the CLI copies
into its ``{"error": {"kind": ..., "detail": ...}}`` object.
"""


class MaharamError(Exception):
    kind = "error"


class FormatError(MaharamError, ValueError):
    kind = "format"


class PreconditionError(MaharamError, ValueError):
    kind = "precondition"


class InvalidPrefixError(MaharamError, ValueError):
    kind = "invalid-prefix"


class DepthError(MaharamError, ValueError):
    """Depth too shallow for the requested coordinates, or above the cap."""

    kind = "depth"


class InfeasibleError(MaharamError, ValueError):
    kind = "infeasible"


class RangeError(MaharamError, ValueError):
    kind = "range"


class SizeCapError(MaharamError, ValueError):
    kind = "size-cap"


class UndecidedError(MaharamError, ArithmeticError):
    """A weight comparison could not be separated below the precision cap."""

    kind = "undecided"

    def __init__(self, message, precision=None):
        super().__init__(message)
        self.precision = precision
