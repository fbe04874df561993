class QLGAError(Exception):
    """Base class for package errors."""


class ParameterError(QLGAError, ValueError):
    """Invalid model or run parameters."""


class SingularSolveError(QLGAError, ArithmeticError):
    """``G - D G D^-1 = -B`` has no solution for the given ``B`` and ``D``."""

    def __init__(self, i: int, j: int, value: complex):
        self.indices = (i, j)
        super().__init__(
            f"B[{i},{j}] = {value:.3g} is nonzero but eigenvalues {i} and {j} coincide"
        )


class ConsistencyError(QLGAError, AssertionError):
    """Two independent computations of the same quantity disagree."""


class NumericalError(QLGAError, FloatingPointError):
    """Non-finite amplitudes encountered during evolution."""


class MemoryBudgetError(QLGAError, MemoryError):
    """A state vector would exceed the configured amplitude budget."""
