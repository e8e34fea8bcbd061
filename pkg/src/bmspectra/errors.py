"""Exception hierarchy shared by all modules."""


class BMSpectraError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(BMSpectraError):
    pass


class DomainError(BMSpectraError, ValueError):
    pass


class NumericalFailure(BMSpectraError):
    """Solver or quadrature failed; the CLI maps these to exit code 3."""


# body
class NonConvex(BMSpectraError):
    pass


class NotEven(BMSpectraError):
    pass


class DegenerateMatrix(BMSpectraError):
    pass


class OptimizerStall(NumericalFailure):
    pass


class NearSingularHessian(NumericalFailure):
    pass


# sphere
class UnsupportedDim(BMSpectraError):
    pass


class GridNotReflectionClosed(BMSpectraError):
    pass


# measure
class NegativeDensity(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


# spectral
class SingularD2h(NumericalFailure):
    pass


class SingularD2phi(NumericalFailure):
    pass


class EigSolverFailure(NumericalFailure):
    pass


class DegenerateDirichlet(NumericalFailure):
    pass


class MassTruncationError(NumericalFailure):
    pass


class EmptyQuadrantBasis(BMSpectraError):
    pass


class SupportLeakage(NumericalFailure):
    pass


# criteria
class OutOfBracket(DomainError):
    pass


class NonpositiveDenominator(DomainError):
    pass


class AxisProximity(DomainError):
    pass


class NonPSD(NumericalFailure):
    pass


# santalo
class DivergentIntegral(NumericalFailure):
    pass


class LegendreFailure(NumericalFailure):
    pass


class VolumeEstimateTooNoisy(NumericalFailure):
    pass
