class ModelError(Exception):
    """A defect in the model being checked, as opposed to a bug in the tool.

    ``code`` is a stable identifier; ``where`` names the statement involved.
    """

    code = "MODEL_ERROR"

    def __init__(self, message: str, where: str | None = None):
        super().__init__(message)
        self.message = message
        self.where = where

    def __str__(self) -> str:
        if self.where:
            return f"{self.code}: {self.message} (at {self.where})"
        return f"{self.code}: {self.message}"


class UnboundName(ModelError):
    code = "UNBOUND_NAME"


class IndexOutOfBounds(ModelError):
    code = "INDEX_OUT_OF_BOUNDS"


class DivideByZero(ModelError):
    code = "DIVIDE_BY_ZERO"


class InvalidChannel(ModelError):
    code = "INVALID_CHANNEL"


class ProcessLimit(ModelError):
    code = "PROCESS_LIMIT"


class DStepViolation(ModelError):
    code = "DSTEP_VIOLATION"


class AssertionViolation(ModelError):
    code = "ASSERTION_VIOLATED"


class CompileError(ModelError):
    code = "COMPILE_ERROR"


class IllegalTransition(Exception):
    """Raised when a transition is applied in a state where it is not enabled."""
