"""Bounded measurable subsets of R^n, represented by their indicator.

A region is a bounding box plus a pure membership test; set algebra builds
new regions from old ones. Membership is always false outside the bounding
box, which is what makes every region bounded.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np

from src.errors import DimensionMismatchError, RegionError
from src.integrate.field import ScalarField, as_points
from src.region.box import Box

MembershipPredicate = Callable[[np.ndarray], np.ndarray]


class Region(ABC):
    def __init__(self, bounds: Box):
        self.bounds = bounds
        self.dim = bounds.dim

    @abstractmethod
    def _member(self, points: np.ndarray) -> np.ndarray:
        """Membership for points already known to lie in the bounding box."""

    @abstractmethod
    def describe(self) -> str: ...

    def contains(self, points: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
        pts = as_points(points, self.dim)
        inside = self.bounds.contains(pts)
        if inside.any():
            inside[inside] = self._member(pts[inside])
        return inside

    def __contains__(self, point: Sequence[float]) -> bool:
        return bool(self.contains(np.array([point], dtype=float))[0])

    def volume_bound(self) -> float:
        return self.bounds.volume

    def _check(self, other: "Region") -> None:
        if other.dim != self.dim:
            raise DimensionMismatchError(f"cannot combine regions of dimension {self.dim} and {other.dim}")

    def __or__(self, other: "Region") -> "Region":
        return UnionRegion(self, other)

    def __and__(self, other: "Region") -> "Region":
        return IntersectionRegion(self, other)

    def __sub__(self, other: "Region") -> "Region":
        return DifferenceRegion(self, other)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class BoxRegion(Region):
    def _member(self, points: np.ndarray) -> np.ndarray:
        return np.ones(points.shape[0], dtype=bool)

    def describe(self) -> str:
        return f"box {self.bounds.describe()}"


class BallRegion(Region):
    def __init__(self, center: Sequence[float], radius: float):
        if not radius > 0:
            raise RegionError(f"ball radius must be > 0, got {radius}")
        c = np.asarray(center, dtype=float)
        super().__init__(Box.of(c - radius, c + radius))
        self.center = c
        self.radius = float(radius)

    def _member(self, points: np.ndarray) -> np.ndarray:
        return np.sum((points - self.center) ** 2, axis=1) <= self.radius**2

    def describe(self) -> str:
        return f"ball(center={tuple(self.center.tolist())}, radius={self.radius!r})"


class PredicateRegion(Region):
    def __init__(self, predicate: MembershipPredicate, bounds: Box, label: str | None = None):
        pdim = getattr(predicate, "dim", bounds.dim)
        if pdim != bounds.dim:
            raise DimensionMismatchError(f"predicate of dimension {pdim} inside a dim-{bounds.dim} box")
        super().__init__(bounds)
        self.predicate = predicate
        self.label = label or getattr(predicate, "label", "<predicate>")

    def _member(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(points), dtype=bool)

    def describe(self) -> str:
        return f"{{{self.label}}} in {self.bounds.describe()}"


class UnionRegion(Region):
    def __init__(self, left: Region, right: Region):
        left._check(right)
        super().__init__(left.bounds.hull(right.bounds))
        self.left, self.right = left, right

    def _member(self, points: np.ndarray) -> np.ndarray:
        out = self.left.contains(points)
        rest = ~out
        if rest.any():
            out[rest] = self.right.contains(points[rest])
        return out

    def describe(self) -> str:
        return f"({self.left.describe()}) union ({self.right.describe()})"


class IntersectionRegion(Region):
    def __init__(self, left: Region, right: Region):
        left._check(right)
        super().__init__(left.bounds)
        self.left, self.right = left, right

    def _member(self, points: np.ndarray) -> np.ndarray:
        out = self.left.contains(points)
        if out.any():
            out[out] = self.right.contains(points[out])
        return out

    def describe(self) -> str:
        return f"({self.left.describe()}) intersect ({self.right.describe()})"


class DifferenceRegion(Region):
    def __init__(self, left: Region, right: Region):
        left._check(right)
        super().__init__(left.bounds)
        self.left, self.right = left, right

    def _member(self, points: np.ndarray) -> np.ndarray:
        out = self.left.contains(points)
        if out.any():
            out[out] = ~self.right.contains(points[out])
        return out

    def describe(self) -> str:
        return f"({self.left.describe()}) minus ({self.right.describe()})"


class CellRegion(Region):
    """A dyadic cell of a partition intersected with its parent region.

    Cells are half-open, [lo, hi), except on faces shared with the root
    box's upper faces, so neighbouring cells never claim the same point.
    """

    def __init__(self, box: Box, parent: Region, closed_upper: Sequence[bool], label: str = ""):
        super().__init__(box)
        self.parent = parent
        self.closed_upper = np.asarray(closed_upper, dtype=bool)
        self.label = label

    def contains(self, points: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
        pts = as_points(points, self.dim)
        upper_ok = (pts < self.bounds.high) | (self.closed_upper & (pts <= self.bounds.high))
        inside = np.all((pts >= self.bounds.low) & upper_ok, axis=1)
        if inside.any():
            inside[inside] = self.parent.contains(pts[inside])
        return inside

    def _member(self, points: np.ndarray) -> np.ndarray:
        return self.parent.contains(points)

    def describe(self) -> str:
        return self.label or f"cell {self.bounds.describe()}"


class SupportRegion(Region):
    """Points of `base` where every listed field is farther than `zeta` from zero."""

    def __init__(self, base: Region, fields: Sequence[ScalarField], zeta: float):
        super().__init__(base.bounds)
        self.base = base
        self.fields = tuple(fields)
        self.zeta = float(zeta)

    def _member(self, points: np.ndarray) -> np.ndarray:
        out = self.base.contains(points)
        for f in self.fields:
            if not out.any():
                break
            out[out] = np.abs(f(points[out])) > self.zeta
        return out

    def describe(self) -> str:
        names = " and ".join(f"({f.label}) != 0" for f in self.fields)
        return f"{{{names}}} in ({self.base.describe()})"


def box(lo: Sequence[float], hi: Sequence[float]) -> BoxRegion:
    return BoxRegion(Box.of(lo, hi))


def ball(center: Sequence[float], radius: float) -> BallRegion:
    return BallRegion(center, radius)
