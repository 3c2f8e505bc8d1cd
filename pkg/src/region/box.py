from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.errors import DimensionMismatchError, RegionError


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DimensionMismatchError(f"box corners differ in dimension: {len(self.lo)} vs {len(self.hi)}")
        if not self.lo:
            raise DimensionMismatchError("box needs at least one axis")
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise RegionError(f"box axis {i + 1} has a non-finite bound [{a}, {b}]")
            if not a < b:
                raise RegionError(f"empty box: axis {i + 1} has lo {a} >= hi {b}")

    @classmethod
    def of(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        return cls(tuple(float(x) for x in lo), tuple(float(x) for x in hi))

    @classmethod
    def cube(cls, dim: int, lo: float = 0.0, hi: float = 1.0) -> "Box":
        return cls((float(lo),) * dim, (float(hi),) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def low(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def high(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def width(self) -> np.ndarray:
        return self.high - self.low

    @property
    def volume(self) -> float:
        return float(np.prod(self.width))

    @property
    def center(self) -> np.ndarray:
        return (self.low + self.high) / 2

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.all((points >= self.low) & (points <= self.high), axis=1)

    def hull(self, other: "Box") -> "Box":
        return Box(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def describe(self) -> str:
        return " x ".join(f"[{a!r}, {b!r}]" for a, b in zip(self.lo, self.hi))
