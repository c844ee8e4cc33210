"""Exception hierarchy shared by every module."""


class SRURGSError(Exception):
    pass


class ConfigurationError(SRURGSError, ValueError):
    """Search space, dataset and algorithm settings do not fit together."""


class SchemaError(SRURGSError, ValueError):
    """Inputs have the wrong shape, length or names."""


class DatasetError(SRURGSError, ValueError):
    """A data file could not be ingested."""


class ExpressionSyntaxError(SRURGSError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at column {position})"
        super().__init__(message)


class NonFiniteEvaluation(SRURGSError, ArithmeticError):
    """An expression produced NaN, +/-inf or a complex value."""


class FitFailed(SRURGSError):
    """Constant fitting could not start from any initial guess."""


class StoreError(SRURGSError):
    pass


class MergeError(StoreError):
    pass


class GenerationError(SRURGSError):
    pass
