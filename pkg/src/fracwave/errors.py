"""Exception types shared across the package.

Exit-code mapping used by the CLI: ParameterError -> 2,
IndeterminateError -> 3, everything else derived from FracwaveError -> 4.
"""


class FracwaveError(Exception):
    """Base class for all package errors."""


class ParameterError(FracwaveError, ValueError):
    """Invalid argument or violated precondition."""


class DomainError(ParameterError):
    """Argument outside the mathematical domain of an operation."""


class RegimeError(ParameterError):
    """Requested evaluation outside the supported numerical regime."""


class DivergenceError(FracwaveError, ValueError):
    """Tail integral with a non-integrable envelope (exponent <= 1)."""


class ConvergenceError(FracwaveError, RuntimeError):
    """Quadrature budget exhausted before reaching the requested tolerance.

    Carries the best available value and the achieved error estimate.
    """

    def __init__(self, message, value=None, err_est=None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class RoundoffError(FracwaveError, RuntimeError):
    """Computed quantity violates an exact identity beyond round-off scale."""


class FactorizationError(FracwaveError, RuntimeError):
    """Dense PSD factorization failed within the jitter budget."""

    def __init__(self, message, failed_jitter=None):
        super().__init__(message)
        self.failed_jitter = failed_jitter


class GridCapError(ParameterError):
    """Requested grid exceeds the dense-factorization point cap."""


class IndeterminateError(FracwaveError, RuntimeError):
    """Numerical classifier landed inside the near-critical band."""
