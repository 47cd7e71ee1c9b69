"""Exception hierarchy shared by all solver modules."""


class GnschError(Exception):
    """Base class for all solver errors."""


class ConfigError(GnschError):
    """Invalid, missing or unknown configuration key. Message names the key."""


class DomainError(GnschError, ValueError):
    """Input outside the mathematical domain of a constitutive function."""


class CflError(GnschError):
    """Time step violates the CFL-like stability condition."""


class PositivityError(GnschError):
    """Density lost positivity in at least one cell."""


class BoundsError(GnschError):
    """Mass fraction (or the auxiliary ratio) left its admissible range."""


class SolverError(GnschError):
    """Linear solver failed to converge.

    Carries the final relative residual and iteration count.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepSizeError(GnschError):
    """Auxiliary-variable update guard failed; the step must be retried smaller."""


class RetryLimitError(GnschError):
    """Time-step halving retries exhausted without a valid step."""
