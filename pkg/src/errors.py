"""Exception hierarchy shared by every workbench module.

Library code raises these; the CLI turns them into exit status 1.
"""
from __future__ import annotations

from typing import Sequence


class WorkbenchError(Exception):
    """Root of all input and computation errors."""


class ExprSyntaxError(WorkbenchError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.message = message
        self.position = position
        self.source = source
        super().__init__(f"syntax error at column {position + 1}: {message}")


class UnknownVariableError(WorkbenchError):
    def __init__(self, name: str, dim: int, position: int | None = None):
        self.name = name
        self.dim = dim
        self.position = position
        super().__init__(f"unknown variable {name} (dimension is {dim})")


class UnknownFunctionError(WorkbenchError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        super().__init__(f"unknown function {name}")


class ExprTypeError(WorkbenchError):
    pass


class DomainEvaluationError(WorkbenchError):
    def __init__(self, message: str, point: Sequence[float] | None = None):
        self.point = tuple(float(x) for x in point) if point is not None else None
        where = f" at {self.point}" if self.point is not None else ""
        super().__init__(f"{message}{where}")


class DimensionMismatchError(WorkbenchError):
    pass


class RegionError(WorkbenchError):
    pass


class IntegrationError(WorkbenchError):
    pass


class ToleranceNotMetError(IntegrationError):
    pass


class WeightError(WorkbenchError):
    pass


class DegenerateFamilyError(WorkbenchError):
    pass


class FamilyNotCertifiedError(WorkbenchError):
    pass


class ScenarioError(WorkbenchError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class TruncationError(WorkbenchError):
    pass
