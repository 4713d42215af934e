"""Exception hierarchy.

Every error carries a short ``kind`` string so the CLI can serialize it as
``{"error": {"kind": ..., "detail": ...}}`` and pick an exit code.
"""

from __future__ import annotations


class SpecflowError(Exception):
    """Base class for all computational errors (CLI exit code 3)."""

    kind = "computation"


class InputError(SpecflowError, ValueError):
    """Malformed or inconsistent input (CLI exit code 2)."""

    kind = "input"


class InconsistencyError(InputError):
    """An evaluator does not behave like the object it claims to be."""

    kind = "inconsistent"


class DegenerateInputError(SpecflowError):
    kind = "degenerate"


class ResolutionError(SpecflowError):
    """Adaptive refinement ran out of budget.

    ``interval`` holds the offending parameter subinterval when known.
    """

    kind = "resolution"

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class EndpointSingularError(SpecflowError):
    kind = "endpoint-singular"


class IrregularCrossingError(SpecflowError):
    kind = "irregular-crossing"

    def __init__(self, message: str, instant: float):
        super().__init__(message)
        self.instant = instant


class ClutchError(SpecflowError):
    kind = "clutch"


class WindowError(SpecflowError):
    kind = "window"


class UnderResolvedError(SpecflowError):
    kind = "under-resolved"


class PrecisionError(SpecflowError):
    kind = "precision"


class TransversalityError(SpecflowError):
    kind = "transversality"


class NonFredholmError(SpecflowError):
    kind = "non-fredholm"


class PreconditionError(SpecflowError):
    kind = "precondition"
