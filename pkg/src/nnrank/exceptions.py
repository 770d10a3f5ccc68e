"""Exception classes raised across the package."""


class NegativeEntryError(ValueError):
    """A tensor that must be nonnegative has a negative entry."""


class ModeError(TypeError):
    """Exact (rational) and float scalars were mixed."""


class NotInModelError(ValueError):
    """The tensor does not have nonnegative rank <= 2.

    The failing :class:`~nnrank.rank2.DecisionResult` is kept on ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SearchTooLargeError(RuntimeError):
    """The permutation search space exceeds the configured limit."""


class DecompositionError(ArithmeticError):
    """A constructive decomposition failed numerically or did not verify."""


class RefusedInputError(ValueError):
    """Input lies where the membership criterion is undefined (e.g. singular slices)."""
