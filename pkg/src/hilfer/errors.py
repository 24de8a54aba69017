from typing import Any, Dict, Optional


class HilferError(Exception):
    """Base error; every subclass maps to a CLI exit status and an error document."""

    kind = "HilferError"
    exit_status = 2

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_document(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {"kind": self.kind, "message": self.message}
        for key, value in self.details.items():
            if isinstance(value, (str, int, float, bool)) or value is None:
                document[key] = value
            else:
                document[key] = str(value)
        return document


class NumericalFailure(HilferError, ArithmeticError):
    exit_status = 1


class InputError(HilferError, ValueError):
    exit_status = 2


class NonConvergence(NumericalFailure):
    kind = "NonConvergence"


class MaxIterExceeded(NumericalFailure):
    kind = "MaxIterExceeded"

    def __init__(self, message: str, last_residual: float, diagnostics: Optional[Any] = None) -> None:
        super().__init__(message, last_residual=last_residual)
        self.last_residual = last_residual
        self.diagnostics = diagnostics


class InvalidParams(InputError):
    kind = "InvalidParams"


class InvalidOrder(InputError):
    kind = "InvalidOrder"


class NonSquare(InputError):
    kind = "NonSquare"


class NonMonotonePsi(InputError):
    kind = "NonMonotonePsi"


class DelayOutOfRange(InputError):
    kind = "DelayOutOfRange"


class SingularEndpoint(InputError):
    kind = "SingularEndpoint"


class HNotAligned(InputError):
    kind = "HNotAligned"


class BudgetTooSmall(InputError):
    kind = "BudgetTooSmall"


class ParseError(InputError):
    kind = "ParseError"

    def __init__(self, message: str, path: str = "", line: Optional[int] = None, field: str = "") -> None:
        super().__init__(message, path=path, line=line, field=field)
        self.line = line
        self.field = field


class ValidationError(InputError):
    kind = "ValidationError"

    def __init__(self, field: str, message: str = "") -> None:
        super().__init__(message or f"invalid value for {field}", field=field)
        self.field = field

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"
