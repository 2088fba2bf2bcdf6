"""Exception types raised across the package."""


class ComplexMomentumError(Exception):
    """Base class for all package errors."""


class DegenerateCubic(ComplexMomentumError, ValueError):
    pass


class NonSquare(ComplexMomentumError, ValueError):
    pass


class DimensionTooLarge(ComplexMomentumError, ValueError):
    pass


class DimensionMismatch(ComplexMomentumError, ValueError):
    pass


class JacobianUnavailable(ComplexMomentumError):
    pass


class NonfiniteGradient(ComplexMomentumError, FloatingPointError):
    pass


class NonfiniteIterate(ComplexMomentumError, FloatingPointError):
    """Iterates left the finite region or crossed the divergence sentinel."""


class UnknownPreset(ComplexMomentumError, ValueError):
    pass


class UnknownMethod(UnknownPreset):
    pass


class EmptyGrid(ComplexMomentumError, ValueError):
    pass
