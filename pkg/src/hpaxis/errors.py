"""Exception types shared across the package."""


class HPAError(Exception):
    """Base class for all package errors."""


class DomainError(HPAError, ValueError):
    """An argument lies outside the domain of a function."""


class PoleError(HPAError, ZeroDivisionError):
    """A Laplace transform was evaluated at (or too close to) its pole."""


class PreconditionError(HPAError, ValueError):
    """Hypotheses required by a computation are not satisfied."""


class NoRootError(HPAError):
    """The equation that locates a crossing has no root in the search domain."""


class NumericalError(HPAError, RuntimeError):
    """An iterative method failed to converge."""


class UnsupportedKernelError(HPAError, ValueError):
    """A kernel configuration is not handled by the requested solver."""


class GridError(HPAError, ValueError):
    """A delay is not an integer multiple of the integration step."""
