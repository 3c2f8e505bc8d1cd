from __future__ import annotations

from enum import StrEnum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from src.errors import IntegrationError

# Refinement depth per dimension when `max_depth` is not set.
DEFAULT_DEPTH = {1: 14, 2: 9, 3: 6}


class Method(StrEnum):
    refine = "refine"
    stochastic = "stochastic"


class IntegratorSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Method = Method.refine
    rel_tol: float = Field(1e-6, gt=0)
    abs_tol: float = Field(1e-9, gt=0)
    max_depth: Optional[int] = Field(None, ge=1)
    sample_count: int = Field(200_000, ge=2)
    seed: int = 0
    strict: bool = False

    def depth_for(self, dim: int) -> int:
        if self.max_depth is not None:
            return self.max_depth
        if dim not in DEFAULT_DEPTH:
            raise IntegrationError(
                f"dimension {dim} is too high for the refine method; use --method stochastic"
            )
        return DEFAULT_DEPTH[dim]

    def tolerance_for(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def refined(self) -> "IntegratorSettings":
        """An independent, higher-resolution setting used to certify results."""
        return self.model_copy(
            update={
                "rel_tol": self.rel_tol / 10,
                "abs_tol": self.abs_tol / 10,
                "max_depth": None if self.max_depth is None else self.max_depth + 1,
                "sample_count": self.sample_count * 4,
                "seed": self.seed + 1,
            }
        )
