"""Scalar fields: bounded functions on R^n evaluated on arrays of points.

A field maps an (N, dim) array of points to an (N,) float array. Fields are
immutable; composition builds new fields that hold references to their
operands, so evaluation is pure and safe to share between workers.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from src.errors import DimensionMismatchError, WeightError

if TYPE_CHECKING:
    from src.region.region import Region


def as_points(points: np.ndarray | Sequence[Sequence[float]], dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, dim) if dim > 0 else pts.reshape(-1, 0)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatchError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts


def _num(value: float) -> str:
    return repr(float(value))


class ScalarField(ABC):
    """A bounded measurable function on R^dim.

    `bounds` is an optional declared range [m, M]; `floor` is an optional
    declared positivity floor f_min > 0 that licenses the reciprocal 1/f.
    """

    def __init__(
        self,
        dim: int,
        *,
        bounds: tuple[float, float] | None = None,
        floor: float | None = None,
        label: str = "",
    ):
        if dim < 1:
            raise DimensionMismatchError(f"field dimension must be positive, got {dim}")
        if floor is not None and not floor > 0:
            raise WeightError(f"positivity floor must be > 0, got {floor}")
        self.dim = dim
        self.bounds = bounds
        self.floor = floor
        self.label = label

    @abstractmethod
    def _evaluate(self, points: np.ndarray) -> np.ndarray: ...

    def evaluate(self, points: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
        pts = as_points(points, self.dim)
        if pts.shape[0] == 0:
            return np.zeros(0)
        return self._evaluate(pts)

    __call__ = evaluate

    def at(self, *coords: float) -> float:
        return float(self.evaluate(np.array([coords], dtype=float))[0])

    def describe(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r}, dim={self.dim})"

    # ---- annotations

    def with_floor(self, floor: float) -> "ScalarField":
        return AnnotatedField(self, floor=floor, bounds=self.bounds)

    def with_bounds(self, lo: float, hi: float) -> "ScalarField":
        return AnnotatedField(self, floor=self.floor, bounds=(lo, hi))

    def sup_abs(self) -> float | None:
        if self.bounds is None:
            return None
        return max(abs(self.bounds[0]), abs(self.bounds[1]))

    # ---- composition

    def reciprocal(self) -> "ReciprocalField":
        return ReciprocalField(self)

    def restrict(self, region: "Region") -> "RestrictedField":
        return RestrictedField(self, region)

    def _check(self, other: "ScalarField") -> None:
        if other.dim != self.dim:
            raise DimensionMismatchError(f"cannot combine fields of dimension {self.dim} and {other.dim}")

    def __add__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, (int, float)):
            return combine([self, ConstantField(float(other), self.dim)], [1.0, 1.0])
        self._check(other)
        return combine([self, other], [1.0, 1.0])

    def __radd__(self, other: float) -> "ScalarField":
        return self.__add__(other)

    def __sub__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, (int, float)):
            return combine([self, ConstantField(float(other), self.dim)], [1.0, -1.0])
        self._check(other)
        return combine([self, other], [1.0, -1.0])

    def __rsub__(self, other: float) -> "ScalarField":
        return combine([ConstantField(float(other), self.dim), self], [1.0, -1.0])

    def __neg__(self) -> "ScalarField":
        return combine([self], [-1.0])

    def __mul__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, (int, float)):
            return combine([self], [float(other)])
        self._check(other)
        return ProductField([self, other])

    def __rmul__(self, other: float) -> "ScalarField":
        return self.__mul__(other)

    def __truediv__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, (int, float)):
            if other == 0:
                raise ZeroDivisionError("field divided by zero")
            return combine([self], [1.0 / float(other)])
        self._check(other)
        return ProductField([self, other.reciprocal()])


class ConstantField(ScalarField):
    def __init__(self, value: float, dim: int):
        super().__init__(
            dim,
            bounds=(value, value),
            floor=value if value > 0 else None,
            label=_num(value),
        )
        self.value = float(value)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], self.value)


class FunctionField(ScalarField):
    """Wraps a vectorized Python callable `fn(points) -> values`."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        dim: int,
        label: str = "<function>",
        *,
        bounds: tuple[float, float] | None = None,
        floor: float | None = None,
    ):
        super().__init__(dim, bounds=bounds, floor=floor, label=label)
        self.fn = fn

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(points), dtype=float).reshape(points.shape[0])


class AnnotatedField(ScalarField):
    """Same values as `base`, with a different declared floor or bounds."""

    def __init__(self, base: ScalarField, *, floor: float | None, bounds: tuple[float, float] | None):
        super().__init__(base.dim, bounds=bounds, floor=floor, label=base.label)
        self.base = base

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.base._evaluate(points)


class ReciprocalField(ScalarField):
    """1/base, refusing any base without a declared positivity floor.

    Every evaluation re-checks the floor; a sampled value below it is a
    contract violation, not a silent NaN or a huge weight.
    """

    def __init__(self, base: ScalarField):
        if base.floor is None:
            raise WeightError(f"reciprocal of '{base.label}' needs a declared positivity floor")
        bounds = None
        if base.bounds is not None and base.bounds[1] > 0:
            bounds = (1.0 / base.bounds[1], 1.0 / base.floor)
        super().__init__(
            base.dim,
            bounds=bounds,
            floor=bounds[0] if bounds else None,
            label=f"1 / ({base.label})",
        )
        self.base = base

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        values = self.base._evaluate(points)
        below = values < self.base.floor
        if below.any():
            first = int(np.flatnonzero(below)[0])
            raise WeightError(
                f"'{self.base.label}' = {values[first]!r} at {tuple(points[first])} "
                f"is below its declared floor {self.base.floor!r}"
            )
        return 1.0 / values

    def is_reciprocal_of(self, f: ScalarField) -> bool:
        return _strip(self.base) is _strip(f) or self.base.label == f.label


class RestrictedField(ScalarField):
    """Equals `base` on `region` and 0 elsewhere; `base` is only evaluated on the region."""

    def __init__(self, base: ScalarField, region: "Region"):
        if region.dim != base.dim:
            raise DimensionMismatchError(f"cannot restrict a dim-{base.dim} field to a dim-{region.dim} region")
        bounds = None
        if base.bounds is not None:
            bounds = (min(base.bounds[0], 0.0), max(base.bounds[1], 0.0))
        super().__init__(base.dim, bounds=bounds, label=f"({base.label}) on [{region.describe()}]")
        self.base = base
        self.region = region

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        out = np.zeros(points.shape[0])
        inside = self.region.contains(points)
        if inside.any():
            out[inside] = self.base._evaluate(points[inside])
        return out


class LinearCombination(ScalarField):
    """Σ coeffs[i] · terms[i], summed left to right."""

    def __init__(self, terms: Sequence[ScalarField], coeffs: Sequence[float]):
        if not terms or len(terms) != len(coeffs):
            raise ValueError("a linear combination needs matching, non-empty terms and coefficients")
        dim = terms[0].dim
        for t in terms:
            if t.dim != dim:
                raise DimensionMismatchError("all terms of a combination must share a dimension")
        self.terms = tuple(terms)
        self.coeffs = tuple(float(c) for c in coeffs)
        super().__init__(dim, bounds=self._bounds(), label=self._label())

    def _bounds(self) -> tuple[float, float] | None:
        lo = hi = 0.0
        for t, c in zip(self.terms, self.coeffs):
            if t.bounds is None:
                return None
            a, b = c * t.bounds[0], c * t.bounds[1]
            lo += min(a, b)
            hi += max(a, b)
        return lo, hi

    def _label(self) -> str:
        parts = []
        for t, c in zip(self.terms, self.coeffs):
            parts.append(f"({t.label})" if c == 1.0 else f"{_num(c)} * ({t.label})")
        return " + ".join(parts)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        out = self.coeffs[0] * self.terms[0]._evaluate(points)
        for t, c in zip(self.terms[1:], self.coeffs[1:]):
            out = out + c * t._evaluate(points)
        return out


class ProductField(ScalarField):
    """Pointwise product of its factors, multiplied left to right."""

    def __init__(self, factors: Sequence[ScalarField]):
        flat: list[ScalarField] = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, ProductField) else [f])
        dim = flat[0].dim
        for f in flat:
            if f.dim != dim:
                raise DimensionMismatchError("all factors of a product must share a dimension")
        self.factors = tuple(flat)
        super().__init__(dim, bounds=self._bounds(), label=" * ".join(f"({f.label})" for f in flat))

    def _bounds(self) -> tuple[float, float] | None:
        lo, hi = 1.0, 1.0
        for f in self.factors:
            if f.bounds is None:
                return None
            corners = (lo * f.bounds[0], lo * f.bounds[1], hi * f.bounds[0], hi * f.bounds[1])
            lo, hi = min(corners), max(corners)
        return lo, hi

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        out = self.factors[0]._evaluate(points)
        for f in self.factors[1:]:
            out = out * f._evaluate(points)
        return out


def _strip(field: ScalarField) -> ScalarField:
    while isinstance(field, AnnotatedField):
        field = field.base
    return field


def combine(terms: Sequence[ScalarField], coeffs: Sequence[float]) -> ScalarField:
    """Linear combination, flattening nested combinations and merging repeated terms."""
    merged: dict[int, list] = {}
    order: list[int] = []

    def push(term: ScalarField, c: float) -> None:
        if isinstance(term, LinearCombination):
            for t, tc in zip(term.terms, term.coeffs):
                push(t, c * tc)
            return
        key = id(term)
        if key not in merged:
            merged[key] = [term, 0.0]
            order.append(key)
        merged[key][1] += c

    for t, c in zip(terms, coeffs):
        push(t, float(c))
    flat_terms = [merged[k][0] for k in order]
    flat_coeffs = [merged[k][1] for k in order]
    if len(flat_terms) == 1 and flat_coeffs[0] == 1.0:
        return flat_terms[0]
    return LinearCombination(flat_terms, flat_coeffs)
