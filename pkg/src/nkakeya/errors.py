"""Exception hierarchy shared by every module."""


class NKakeyaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(NKakeyaError, ValueError):
    pass


class NonSymmetricForm(NKakeyaError, ValueError):
    pass


class NonPositiveScale(NKakeyaError, ValueError):
    pass


class NegativeLength(NKakeyaError, ValueError):
    pass


class ResolutionTooLarge(NKakeyaError, MemoryError):
    pass


class EmptyFamily(NKakeyaError, ValueError):
    pass


class EmptyNet(NKakeyaError, ValueError):
    pass


class GridMismatch(NKakeyaError, ValueError):
    pass


class SupportsOverlap(NKakeyaError, ValueError):
    pass


class DomainNotReduced(NKakeyaError):
    """The sampled normal family is too far from the reference plane."""


class AnchorInfeasible(NKakeyaError):
    """No common anchor keeps every re-anchored segment inside the working cube."""


class QuadratureUnresolved(NKakeyaError):
    """The phase oscillates faster than the requested rule can resolve."""


class BudgetExhausted(NKakeyaError):
    """A construction ran out of budget before reaching its target.

    The best partial result and the ratio it achieved ride along so callers
    can still report them.
    """

    def __init__(self, message, partial=None, achieved=None):
        super().__init__(message)
        self.partial = partial
        self.achieved = achieved


class ThresholdExceeded(NKakeyaError):
    def __init__(self, message, case=None):
        super().__init__(message)
        self.case = case


class ConfigError(NKakeyaError, ValueError):
    pass
