from __future__ import annotations

from enum import StrEnum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.integrate.settings import IntegratorSettings, Method
from src.region.spec import Number, RegionSpec


class Task(StrEnum):
    integrate = "integrate"
    orthogonalize = "orthogonalize"
    expand = "expand"
    parseval = "parseval"
    partition_parseval = "partition-parseval"
    cauchy_schwarz = "cauchy-schwarz"
    product_criterion = "product-criterion"
    corollary = "corollary"


# Conventional field names each task reads.
ROLES: dict[Task, tuple[str, ...]] = {
    Task.integrate: ("f",),
    Task.orthogonalize: (),
    Task.expand: ("f",),
    Task.parseval: ("f",),
    Task.partition_parseval: ("f",),
    Task.cauchy_schwarz: ("g", "h"),
    Task.product_criterion: ("f", "g"),
    Task.corollary: ("f", "g"),
}

NEEDS_FAMILY = {Task.orthogonalize, Task.expand, Task.parseval, Task.product_criterion, Task.corollary}
NEEDS_SECOND_FAMILY = {Task.product_criterion, Task.corollary}


class FieldSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expr: str
    floor: Optional[Number] = None
    bounds: Optional[tuple[Number, Number]] = None
    # Field is zero outside this region.
    support: Optional[RegionSpec] = None


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # Expressions, or names of entries in `fields`.
    seeds: list[str] = Field(min_length=1)
    # "1/NAME", a field name, or a positive constant; defaults to 1/f (1/g for the second family).
    weight: Optional[str] = None
    tolerance: float = Field(1e-6, gt=0)
    orthogonalize: bool = True


class PartitionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_depth: Optional[int] = Field(None, ge=1)
    zeta: Optional[float] = Field(None, gt=0)
    # Seeds used on every signed cell without its own entry in `per_cell`.
    cell_seeds: Optional[list[str]] = None
    per_cell: dict[int, list[str]] = Field(default_factory=dict)


class IntegratorOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Optional[Method] = None
    rel_tol: Optional[float] = Field(None, gt=0)
    abs_tol: Optional[float] = Field(None, gt=0)
    max_depth: Optional[int] = Field(None, ge=1)
    sample_count: Optional[int] = Field(None, ge=2)
    seed: Optional[int] = None
    strict: Optional[bool] = None

    def apply(self, settings: IntegratorSettings) -> IntegratorSettings:
        update = self.model_dump(exclude_none=True)
        return IntegratorSettings.model_validate({**settings.model_dump(), **update})


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    report: Optional[str] = None
    summary: Optional[str] = None
    csv: Optional[str] = None


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=1)
    task: Task
    region: RegionSpec
    fields: dict[str, FieldSpec] = Field(default_factory=dict)
    family: Optional[FamilySpec] = None
    second_family: Optional[FamilySpec] = None
    truncation: Optional[int] = Field(None, ge=0)
    diagnostics: bool = False
    partition: PartitionSpec = PartitionSpec()
    integrator: IntegratorOverrides = IntegratorOverrides()
    profile: Optional[str] = None
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _task_inputs(self) -> "Scenario":
        missing = [name for name in ROLES[self.task] if name not in self.fields]
        if missing:
            raise ValueError(f"task '{self.task}' needs field(s) {', '.join(missing)}")
        if self.task in NEEDS_FAMILY and self.family is None:
            raise ValueError(f"task '{self.task}' needs a 'family' section")
        if self.task in NEEDS_SECOND_FAMILY and self.second_family is None:
            raise ValueError(f"task '{self.task}' needs a 'second_family' section")
        return self
