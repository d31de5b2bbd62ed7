"""Exception taxonomy shared across the package.

Every error raised on a user-facing path derives from BconvError so the
command line layer can map failures to exit codes without inspecting
messages.  CapExceeded is deliberately distinct from InvalidInput: hitting
an enumeration cap is a resource refusal, not a malformed request.
"""


class BconvError(Exception):
    """Base class for all package errors."""


class InvalidInput(BconvError):
    """Malformed or out-of-domain user input (bad polynomial text, lambda
    outside (0,1), non-probability masses, and so on)."""


class PolynomialSyntaxError(InvalidInput):
    """Polynomial text that does not parse.  Carries a position hint when
    one is available."""


class CapExceeded(BconvError):
    """A request exceeded a configured resource cap (exponent range length,
    enumeration size, memory guard).  The message names the cap."""


class PrecisionError(BconvError):
    """A certified computation could not reach the requested precision
    within its refinement budget.  Partial results, when sound, are
    attached by the caller before raising."""


class UndecidedError(BconvError):
    """An exact decision procedure exhausted its budget without resolving
    a boundary case (for example a Mahler measure interval that keeps
    straddling the classification threshold)."""
