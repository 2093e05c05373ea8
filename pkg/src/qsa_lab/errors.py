"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/domain problems exit 2, instance
document problems exit 3, numerical failures and resource caps exit 4.
"""


class QsaLabError(Exception):
    """Base class for all package errors."""


class DomainError(QsaLabError, ValueError):
    """A parameter is outside its documented domain (bad beta, epsilon, n, ...)."""


class DegenerateInstanceError(DomainError):
    """All energies equal: the cost gap is undefined."""


class InstanceFormatError(QsaLabError, ValueError):
    """An instance document is malformed or violates the schema."""


class DimensionMismatchError(QsaLabError, ValueError):
    """Operands belong to different state spaces or inverse temperatures."""


class CapExceededError(QsaLabError, RuntimeError):
    """A size cap (dense eigensolve, state-vector memory) would be exceeded."""


class NumericalError(QsaLabError, RuntimeError):
    """A numerical routine failed to converge or produced invalid output."""
