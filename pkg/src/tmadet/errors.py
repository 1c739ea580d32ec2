"""Exception hierarchy shared by all modules."""


class TmaError(Exception):
    """Base class for every error raised by this package."""


class EmptyVector(TmaError, ValueError):
    pass


class InvalidP(TmaError, ValueError):
    pass


class EmptyMatrix(TmaError, ValueError):
    pass


class OffsetOutOfRange(TmaError, IndexError):
    pass


class DimensionMismatch(TmaError, ValueError):
    pass


class NotPositiveDefinite(TmaError, ArithmeticError):
    pass


class NotPSD(TmaError, ArithmeticError):
    pass


class TooSmall(TmaError, ValueError):
    pass


class DegenerateRecurrence(TmaError, ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateDivision(TmaError, ArithmeticError):
    """A divisor fell below the underflow guard; ``index`` is the 1-based loop index."""

    def __init__(self, message, index=None, state=None):
        super().__init__(message)
        self.index = index
        self.state = state


class UnknownMethod(TmaError, ValueError):
    pass


class BitCountMismatch(TmaError, ValueError):
    pass


class ConfigInvalid(TmaError, ValueError):
    pass


class NoConvergence(TmaError, RuntimeError):
    pass
