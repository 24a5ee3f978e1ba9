"""Exception types shared across the package."""


class MdxError(Exception):
    """Base class for all package errors."""


class ShapeError(MdxError, ValueError):
    """Operands have incompatible shapes."""


class ConfigError(MdxError, ValueError):
    """A configuration value is unsupported or inconsistent."""


class StateError(MdxError, RuntimeError):
    """An object is used before the state it depends on exists."""


class SingularError(MdxError, ArithmeticError):
    """A matrix factorization hit a non-positive pivot."""


class NumericalError(MdxError, ArithmeticError):
    """A numerical precondition (e.g. non-zero pilot) was violated."""


class FormatError(MdxError, ValueError):
    """A file does not follow the expected on-disk format."""


class TrainingDivergedError(MdxError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message, iteration=None, tti_seeds=None):
        super().__init__(message)
        self.iteration = iteration
        self.tti_seeds = tti_seeds
