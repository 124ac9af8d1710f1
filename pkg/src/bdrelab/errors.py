"""Shared exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Bad configuration or command line usage (exit code 2)."""


class NumericalFailure(RuntimeError):
    """A numerical procedure exhausted its budget (exit code 3).

    Raised when adaptive quadrature cannot reach the requested tolerance
    within its subdivision budget, or when the step-halving guard of the
    survival-conditioned simulator gives up.
    """


class NotComputableError(ValueError):
    """The requested constant has no computable definition here.

    The weakly supercritical front constant involves a weight function that
    is not pinned down by any formula available to this package, so asking
    for it is an error rather than a number.
    """
