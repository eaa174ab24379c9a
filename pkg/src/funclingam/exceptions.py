"""Exception hierarchy shared by all funclingam modules."""


class FuncLingamError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(FuncLingamError, ValueError):
    """A parameter violates its documented precondition."""


class DataError(FuncLingamError, ValueError):
    """Input data is malformed (non-finite values, inconsistent shapes)."""


class InsufficientDataError(DataError):
    """Too few samples for the requested computation."""


class DegenerateDataError(DataError):
    """Data has no spread where spread is required (constant rows, zero variance)."""


class SingularityError(FuncLingamError, ArithmeticError):
    """A linear system is singular or not positive definite."""


class StageError(FuncLingamError):
    """A discovery stage failed; carries the stage name and index."""

    def __init__(self, stage, index, cause):
        self.stage = stage
        self.index = index
        self.cause = cause
        super().__init__(f"{stage} failed at stage {index}: {cause}")
