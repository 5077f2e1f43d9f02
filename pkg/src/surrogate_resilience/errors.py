"""Exception hierarchy shared by all modules."""


class ResilienceError(Exception):
    """Base class for errors raised by this package."""


class EmptyInput(ResilienceError, ValueError):
    pass


class DegenerateRange(ResilienceError, ValueError):
    pass


class NotPositiveDefinite(ResilienceError, ArithmeticError):
    pass


class RankDeficientDesign(ResilienceError, ValueError):
    pass


class OptimizationFailed(ResilienceError, RuntimeError):
    pass


class NonFiniteEvaluation(ResilienceError, ArithmeticError):
    pass


class InferenceFailed(ResilienceError, RuntimeError):
    """Too many bootstrap replicates failed to refit."""


class SingletonGroup(ResilienceError, ValueError):
    pass


class DegenerateConditional(ResilienceError, ArithmeticError):
    pass


class ParseError(ResilienceError, ValueError):
    def __init__(self, line: int, column: str, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column!r}: {reason}")


class MixedNewStudy(ResilienceError, ValueError):
    pass


class IoError(ResilienceError, OSError):
    """A results or plot file could not be written."""
