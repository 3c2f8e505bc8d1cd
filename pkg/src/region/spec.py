"""Serializable region construction trees and `construct_region`."""
from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DimensionMismatchError, RegionError
from src.expr.compiled import evaluate_constant, parse_predicate
from src.region.box import Box
from src.region.region import (
    BallRegion,
    BoxRegion,
    DifferenceRegion,
    IntersectionRegion,
    PredicateRegion,
    Region,
    UnionRegion,
)

# Numbers may be written as constant expressions, e.g. "-pi".
Number = Union[float, str]


class BoxSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lo: list[Number]
    hi: list[Number]


class BallSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    center: list[Number]
    radius: Number


class PredicateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expr: str
    lo: list[Number]
    hi: list[Number]


class RegionSpec(BaseModel):
    """Exactly one of the keys is set: a primitive or a set operation over sub-trees."""

    model_config = ConfigDict(extra="forbid")

    box: Optional[BoxSpec] = None
    ball: Optional[BallSpec] = None
    predicate: Optional[PredicateSpec] = None
    union: Optional[list["RegionSpec"]] = Field(default=None, min_length=2)
    intersection: Optional[list["RegionSpec"]] = Field(default=None, min_length=2)
    difference: Optional[list["RegionSpec"]] = Field(default=None, min_length=2, max_length=2)

    @model_validator(mode="after")
    def _one_kind(self) -> "RegionSpec":
        chosen = [k for k in ("box", "ball", "predicate", "union", "intersection", "difference") if getattr(self, k)]
        if len(chosen) != 1:
            raise ValueError(f"a region node needs exactly one of box/ball/predicate/union/intersection/difference, got {chosen or 'none'}")
        return self


def _vector(values: list[Number], dim: int, what: str) -> list[float]:
    if len(values) != dim:
        raise DimensionMismatchError(f"{what} has {len(values)} entries, expected {dim}")
    return [evaluate_constant(v) for v in values]


def construct_region(spec: RegionSpec, dim: int) -> Region:
    if spec.box is not None:
        return BoxRegion(Box.of(_vector(spec.box.lo, dim, "box lo"), _vector(spec.box.hi, dim, "box hi")))
    if spec.ball is not None:
        radius = evaluate_constant(spec.ball.radius)
        if not radius > 0:
            raise RegionError(f"ball radius must be > 0, got {radius}")
        return BallRegion(_vector(spec.ball.center, dim, "ball center"), radius)
    if spec.predicate is not None:
        bounds = Box.of(_vector(spec.predicate.lo, dim, "predicate lo"), _vector(spec.predicate.hi, dim, "predicate hi"))
        return PredicateRegion(parse_predicate(spec.predicate.expr, dim), bounds)
    if spec.union:
        parts = [construct_region(s, dim) for s in spec.union]
        out = parts[0]
        for p in parts[1:]:
            out = UnionRegion(out, p)
        return out
    if spec.intersection:
        parts = [construct_region(s, dim) for s in spec.intersection]
        out = parts[0]
        for p in parts[1:]:
            out = IntersectionRegion(out, p)
        return out
    if spec.difference:
        left, right = (construct_region(s, dim) for s in spec.difference)
        return DifferenceRegion(left, right)
    raise RegionError("empty region specification")
