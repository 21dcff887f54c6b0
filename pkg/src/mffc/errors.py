"""Exception hierarchy shared across the pipeline."""


class MffcError(Exception):
    """Base class for all pipeline errors."""


class ParameterError(MffcError, ValueError):
    """Invalid construction parameters (Gabor params, pool spec, ...)."""


class InputError(MffcError, ValueError):
    """Malformed input data: wrong shape, size or range."""


class ContractError(MffcError, ValueError):
    """An operation was called outside of its documented precondition."""


class LearningError(MffcError, RuntimeError):
    """A learned model could not be fit to the supplied data."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class FormatError(MffcError, ValueError):
    """A serialized artifact could not be parsed."""


class ConvergenceWarning(UserWarning):
    """An iterative estimator stopped at max_iter before converging."""
