from typing import Dict, List, Optional

# Exit codes shared by the CLI and the HTTP layer
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GEOMETRY = 3
EXIT_NUMERICAL = 4


class RydsatError(Exception):
    """Base error for every pipeline stage"""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, stage: str = "pipeline"):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def to_dict(self) -> Dict:
        return {
            "error": type(self).__name__,
            "stage": self.stage,
            "message": self.message,
            "exit_code": self.exit_code,
        }

    def __str__(self) -> str:
        return f"[{self.stage}] {self.message}"


class InputError(RydsatError):
    exit_code = EXIT_INPUT


class DimacsError(InputError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message, stage="formula")
        self.line_number = line_number


class EmptyClauseError(DimacsError):
    """Clause with no literals, trivially unsatisfiable"""


class ConfigError(InputError):
    def __init__(self, message: str):
        super().__init__(message, stage="config")


class GeometryError(RydsatError):
    exit_code = EXIT_GEOMETRY

    def __init__(self, message: str, violations: Optional[List] = None, stage: str = "embedding"):
        super().__init__(message, stage=stage)
        self.violations = list(violations or [])

    def to_dict(self) -> Dict:
        data = super().to_dict()
        data["violations"] = [str(v) for v in self.violations]
        return data


class NumericalError(RydsatError):
    exit_code = EXIT_NUMERICAL


class InternalConsistencyError(RydsatError):
    exit_code = EXIT_NUMERICAL
