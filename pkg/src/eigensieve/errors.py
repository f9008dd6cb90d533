"""Exception types raised across the package.

Input and configuration problems derive from :class:`InputError`; failures
that occur while the solver is running derive from :class:`SolverError`.
The CLI maps the former to exit code 2 and the latter to exit code 3.
"""


class EigensieveError(Exception):
    """Base class for all package-specific errors."""


class InputError(EigensieveError):
    """Base class for malformed input, bad dimensions, or bad options."""


class ParseError(InputError):
    """Matrix Market input could not be parsed."""


class UnsupportedFormat(InputError):
    """Matrix Market input is well-formed but uses an unsupported variant."""


class DimensionError(InputError):
    """Operands have incompatible or invalid dimensions."""


class ConfigError(InputError):
    """A configuration value violates its constraints."""


class SolverError(EigensieveError):
    """Base class for runtime failures of the solver."""


class ShiftIsEigenvalue(SolverError):
    """The shifted matrix A - sigma*B is singular to working precision.

    Carries the offending shift in ``sigma``. Callers are expected to
    perturb the shift and retry; the factorization itself never does.
    """

    def __init__(self, sigma, message=None):
        self.sigma = complex(sigma)
        super().__init__(message or f"shift {self.sigma} is (numerically) an eigenvalue")


class ReducedSingular(SolverError):
    """The reduced Hessenberg system for a quadrature node is singular.

    Signals that the node z makes I + (sigma - z)*H singular, i.e.
    -1/(sigma - z) is an eigenvalue of H. Callers fall back to a basis
    built at a new shift.
    """

    def __init__(self, z, message=None):
        self.z = complex(z)
        super().__init__(message or f"reduced system singular at node {self.z}")


class CacheEmpty(SolverError):
    """A basis was requested from an empty shift cache."""


class ShiftBudgetExceeded(SolverError):
    """The shift cache refused a new basis because its budget is full."""


class ShiftConstructionFailed(SolverError):
    """Building a basis failed even after perturbing the shift."""


class OnContour(SolverError):
    """An eigenvalue lies (numerically) on the integration contour."""


class InternalError(EigensieveError):
    """An internal consistency guard fired; indicates a bug."""
