from typing import Any, Dict, Optional


class ZulfError(Exception):
    """Root of every error the engine raises on purpose."""


class StructureParseError(ZulfError, ValueError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        where = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{where}{message}")


class ConfigurationError(ZulfError, KeyError):
    def __init__(self, message: str, key: Any = None):
        self.key = key
        super().__init__(message)

    def __str__(self) -> str:
        return str(self.args[0])


class DomainError(ZulfError, ValueError):
    pass


class NormalizationError(DomainError):
    pass


class OracleCapError(DomainError):
    def __init__(self, message: str, cap: int):
        self.cap = cap
        super().__init__(message)


class FactorizationError(ZulfError, ArithmeticError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class InfeasibleLayoutError(ZulfError, RuntimeError):
    def __init__(self, message: str, best_error: float):
        self.best_error = best_error
        super().__init__(message)
