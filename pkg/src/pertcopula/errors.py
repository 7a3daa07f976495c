"""Exception hierarchy shared by every module of the package."""


class CopulaError(Exception):
    """Base class for all errors raised by pertcopula."""


# numerics
class NoSignChange(CopulaError, ValueError):
    pass


class MaxIterationsExceeded(CopulaError, RuntimeError):
    pass


class DomainError(CopulaError, ValueError):
    pass


# basis
class InvalidId(CopulaError, ValueError):
    pass


class FamilyMismatch(CopulaError, ValueError):
    pass


# models
class InvalidSpec(CopulaError, ValueError):
    pass


class NonInteriorSpec(InvalidSpec):
    """Parameters lie on (or outside) the boundary of the admissible region."""


# estimation
class EmptyChain(CopulaError, ValueError):
    pass


class ChainTooShort(CopulaError, ValueError):
    pass


class DivergentSeries(CopulaError, ValueError):
    pass


class NonPositiveVariance(CopulaError, ValueError):
    pass


class SingularMatrix(CopulaError, ValueError):
    pass


class NonPositiveDensity(CopulaError, ValueError):
    pass


class OptimizerDiverged(CopulaError, RuntimeError):
    pass


class SingularInformation(SingularMatrix):
    pass


class BoundaryEstimate(CopulaError, ValueError):
    pass


class DegenerateMean(CopulaError, ValueError):
    pass


class LengthMismatch(CopulaError, ValueError):
    pass
