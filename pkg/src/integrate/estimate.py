"""Numbers with error bounds, and tolerance-aware comparison of them."""
from __future__ import annotations

import math
from enum import StrEnum
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field

from src.integrate.settings import Method


class Estimate(BaseModel):
    """A value with an absolute error bound; arithmetic propagates the bound to first order."""

    model_config = ConfigDict(frozen=True)

    value: float
    err: float = Field(0.0, ge=0)

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(value=float(value), err=0.0)

    @classmethod
    def of(cls, e: "Estimate") -> "Estimate":
        """Value and error only, without an integral's evaluation metadata."""
        return Estimate(value=e.value, err=e.err)

    def __add__(self, other: "Operand") -> "Estimate":
        o = as_estimate(other)
        return Estimate(value=self.value + o.value, err=self.err + o.err)

    def __radd__(self, other: "Operand") -> "Estimate":
        return as_estimate(other) + self

    def __sub__(self, other: "Operand") -> "Estimate":
        o = as_estimate(other)
        return Estimate(value=self.value - o.value, err=self.err + o.err)

    def __rsub__(self, other: "Operand") -> "Estimate":
        return as_estimate(other) - self

    def __neg__(self) -> "Estimate":
        return Estimate(value=-self.value, err=self.err)

    def __mul__(self, other: "Operand") -> "Estimate":
        o = as_estimate(other)
        return Estimate(
            value=self.value * o.value,
            err=abs(o.value) * self.err + abs(self.value) * o.err,
        )

    def __rmul__(self, other: "Operand") -> "Estimate":
        return as_estimate(other) * self

    def __truediv__(self, other: "Operand") -> "Estimate":
        o = as_estimate(other)
        if o.value == 0:
            raise ZeroDivisionError("estimate divided by zero")
        q = self.value / o.value
        return Estimate(value=q, err=(self.err + abs(q) * o.err) / abs(o.value))

    def __rtruediv__(self, other: "Operand") -> "Estimate":
        return as_estimate(other) / self

    def square(self) -> "Estimate":
        return Estimate(value=self.value * self.value, err=2 * abs(self.value) * self.err)

    def sqrt(self) -> "Estimate":
        # Interval image of [value - err, value + err], clipped at 0.
        v = math.sqrt(max(self.value, 0.0))
        hi = math.sqrt(max(self.value + self.err, 0.0))
        lo = math.sqrt(max(self.value - self.err, 0.0))
        return Estimate(value=v, err=max(hi - v, v - lo))

    def distinguishable_from_zero(self) -> bool:
        return abs(self.value) > self.err

    def __format__(self, spec: str) -> str:
        spec = spec or ".6g"
        return f"{self.value:{spec}} ± {self.err:.2g}"


Operand = Union[Estimate, float, int]


def as_estimate(x: Operand) -> Estimate:
    if isinstance(x, Estimate):
        return x
    return Estimate.exact(float(x))


class IntegralEstimate(Estimate):
    evals: int = Field(gt=0)
    method: Method
    seed: Optional[int] = None


class Verdict(StrEnum):
    holds = "holds"
    tight = "equality within tolerance"
    fails = "fails"


class Comparison(BaseModel):
    """The claim lhs <= rhs, judged with slack err_lhs + err_rhs + abs_tol."""

    model_config = ConfigDict(frozen=True)

    lhs: Estimate
    rhs: Estimate
    slack: float
    verdict: Verdict

    @computed_field
    @property
    def margin(self) -> float:
        return self.rhs.value - self.lhs.value

    @computed_field
    @property
    def holds(self) -> bool:
        return self.verdict is not Verdict.fails

    @property
    def strict(self) -> bool:
        return self.verdict is Verdict.holds


def compare(lhs: Operand, rhs: Operand, abs_tol: float) -> Comparison:
    lhs, rhs = as_estimate(lhs), as_estimate(rhs)
    slack = lhs.err + rhs.err + abs_tol
    if lhs.value <= rhs.value - slack:
        verdict = Verdict.holds
    elif lhs.value > rhs.value + slack:
        verdict = Verdict.fails
    else:
        verdict = Verdict.tight
    return Comparison(
        lhs=Estimate.of(lhs),
        rhs=Estimate.of(rhs),
        slack=slack,
        verdict=verdict,
    )
