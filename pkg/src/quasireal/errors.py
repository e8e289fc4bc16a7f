"""Exception hierarchy shared by every module."""


class QuasiRealError(Exception):
    """Base class for all errors raised by quasireal."""


class InvalidWordError(QuasiRealError, ValueError):
    pass


class ParameterError(QuasiRealError, ValueError):
    pass


class ValidityError(QuasiRealError, ValueError):
    """A model fails the structural checks required by a conversion."""


class ConstructionError(QuasiRealError):
    """A constructor could not produce a model satisfying its contract."""


class DegenerateStationarityError(ConstructionError):
    """The leading eigenvalue of the letter sum is complex or not simple."""


class TruncationError(QuasiRealError):
    pass


class NumericalError(QuasiRealError, ArithmeticError):
    pass


class JordanStructureError(NumericalError):
    """A matrix expected to be diagonalizable is not (within tolerance)."""
