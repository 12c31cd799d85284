"""Exception hierarchy shared by the engine."""


class ReachError(Exception):
    """Base class for engine failures."""


class DomainError(ReachError, ArithmeticError):
    """An operation was applied outside its mathematical domain."""


class DimensionError(ReachError, ValueError):
    """Operands disagree on dimension or parameter space."""


class ParseError(ReachError, ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<string>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")


class StepFailure(ReachError):
    """A single evolution step could not be completed at the requested size."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class StepTooLarge(StepFailure):
    """The left-hand prefactor of a two-parameter error formula is not positive."""


class BoundingFailed(StepFailure):
    """No a-priori bounding box was found for the step."""


class IntegrationFailed(StepFailure):
    """The Picard iteration did not produce a contracting enclosure."""


class Timeout(ReachError):
    pass
