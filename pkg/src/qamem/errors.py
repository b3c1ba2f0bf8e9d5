"""Exception and warning types raised across the package."""


class QamemError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(QamemError, ValueError):
    pass


class DimensionMismatchError(QamemError, ValueError):
    pass


class UnsupportedFormError(QamemError, ValueError):
    pass


class UnsupportedRegimeError(QamemError, ValueError):
    pass


class SolverError(QamemError, RuntimeError):
    pass


class DegeneracyError(SolverError):
    pass


class PositivityError(SolverError):
    pass


class IncompleteBasisError(SolverError):
    pass


class StiffnessError(SolverError):
    pass


class ConvergenceError(SolverError):
    """Raised by iterative refinement; ``seed`` keeps the starting guess."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class DivergenceError(SolverError):
    pass


class ManifoldError(QamemError, RuntimeError):
    pass


class IllConditionedManifoldError(ManifoldError):
    pass


class OverlappingLobesError(QamemError, ValueError):
    pass


class ConfigError(QamemError, ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


class CoverageWarning(UserWarning):
    pass


class DegeneracyWarning(UserWarning):
    pass
