"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad inputs: broken invariants, shape mismatches, unknown config keys."""


class NumericalError(RuntimeError):
    """A numerical operation failed: singular matrix, degenerate data, no convergence."""


class PipelineStageError(RuntimeError):
    """Failure inside a named pipeline stage; the original error is chained."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
