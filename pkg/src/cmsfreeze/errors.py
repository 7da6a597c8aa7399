"""Exception hierarchy shared by all modules."""


class CMSError(Exception):
    """Base class for all package errors."""


class DomainError(CMSError, ValueError):
    """A mathematically invalid request (maps to CLI exit code 2)."""


class DimensionError(CMSError, ValueError):
    pass


class SingularInputError(DomainError):
    """A drift or weight denominator is below the singularity floor."""


class ChamberError(DomainError):
    """A point is outside the (closed or open) Weyl chamber."""


class NonRealRootsError(DomainError):
    pass


class NegativeSquareError(DomainError):
    pass


class DegenerateNuZeroError(DomainError):
    """B-case with nu = 0 and x_N(0) = 0: no interior solution exists."""


class BracketError(CMSError, RuntimeError):
    pass


class StepUnderflowError(CMSError, RuntimeError):
    pass


class SubstepExhaustedError(CMSError, RuntimeError):
    pass
