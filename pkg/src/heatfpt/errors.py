"""Exception hierarchy.

Precondition failures map to CLI exit code 2, numerical failures to 3.
"""


class FptError(Exception):
    """Base class for all package errors."""


class PreconditionError(FptError, ValueError):
    """Arguments violate an operation's stated preconditions."""


class DomainError(PreconditionError):
    """Evaluation outside a function's domain (t >= pin time, zero of h, ...)."""


class NumericalError(FptError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""


class TruncationError(NumericalError):
    """An infinite series did not converge within the allowed number of terms."""
