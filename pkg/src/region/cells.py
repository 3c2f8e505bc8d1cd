"""Dyadic subdivision of a bounding box, shared by the integrator and the sign partition.

Cells of one level are handled together as integer index arrays, so every
probe, membership test and field evaluation is a single vectorized call.
Cell order is lexicographic in (parent order, child offset), which keeps
every reduction over cells deterministic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cache

import numpy as np

from src.region.box import Box
from src.region.region import CellRegion, Region

GAUSS_ORDER = 5
RANDOM_PROBES = 4


@cache
def child_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)


@dataclass(frozen=True)
class ProductRule:
    """Tensor Gauss-Legendre rule on the unit cube; weights sum to 1."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    @cache
    def gauss(cls, dim: int, order: int = GAUSS_ORDER) -> "ProductRule":
        x, w = np.polynomial.legendre.leggauss(order)
        t, w = (x + 1) / 2, w / 2
        grids = np.meshgrid(*([t] * dim), indexing="ij")
        wgrids = np.meshgrid(*([w] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return cls(nodes, weights)

    def split(self) -> "ProductRule":
        """The same rule applied on each of the 2^dim half-size children."""
        dim = self.nodes.shape[1]
        offsets = child_offsets(dim)
        nodes = np.concatenate([(o + self.nodes) / 2 for o in offsets])
        weights = np.concatenate([self.weights / len(offsets)] * len(offsets))
        return ProductRule(nodes, weights)


@dataclass(frozen=True)
class ProbeLayout:
    """Probe points in unit-cell coordinates.

    `fixed` holds the 2^dim cell corners followed by the centroid;
    `lattice` is the closed {0, 1/2, 1}^dim grid, used only to decide
    whether a cell misses the region entirely.
    """

    dim: int
    fixed: np.ndarray
    lattice: np.ndarray

    @classmethod
    @cache
    def for_dim(cls, dim: int) -> "ProbeLayout":
        corners = child_offsets(dim).astype(float)
        centroid = np.full((1, dim), 0.5)
        lattice = np.array(list(itertools.product((0.0, 0.5, 1.0), repeat=dim)))
        return cls(dim, np.concatenate([corners, centroid]), lattice)

    @property
    def centroid_column(self) -> int:
        return len(self.fixed) - 1


@dataclass(frozen=True)
class CellLevel:
    """All active cells at one subdivision depth of `root`."""

    root: Box
    depth: int
    index: np.ndarray  # (M, dim) integer cell coordinates in [0, 2^depth)

    @classmethod
    def top(cls, root: Box) -> "CellLevel":
        return cls(root, 0, np.zeros((1, root.dim), dtype=np.int64))

    @property
    def size(self) -> int:
        return self.index.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.root.width / (1 << self.depth)

    @property
    def volume(self) -> float:
        return float(np.prod(self.width))

    @property
    def lows(self) -> np.ndarray:
        return self.root.low + self.index * self.width

    def points(self, unit: np.ndarray) -> np.ndarray:
        """Map unit-cell points, shape (P, d) or (M, P, d), into every cell: (M, P, d)."""
        lows = self.lows[:, None, :]
        if unit.ndim == 2:
            unit = unit[None, :, :]
        return lows + unit * self.width

    def select(self, mask: np.ndarray) -> "CellLevel":
        return CellLevel(self.root, self.depth, self.index[mask])

    def children(self) -> "CellLevel":
        offsets = child_offsets(self.root.dim)
        index = (2 * self.index[:, None, :] + offsets[None, :, :]).reshape(-1, self.root.dim)
        return CellLevel(self.root, self.depth + 1, index)

    def rng(self, seed: int) -> np.random.Generator:
        return np.random.default_rng([seed, self.depth])

    def box(self, i: int) -> Box:
        lo = self.root.low + self.index[i] * self.width
        hi = np.where(self.index[i] + 1 == (1 << self.depth), self.root.high, lo + self.width)
        return Box.of(lo, hi)

    def closed_upper(self, i: int) -> tuple[bool, ...]:
        return tuple(bool(k + 1 == (1 << self.depth)) for k in self.index[i])

    def cell_region(self, i: int, parent: Region, label: str = "") -> CellRegion:
        return CellRegion(self.box(i), parent, self.closed_upper(i), label)


@dataclass(frozen=True)
class Probe:
    """Membership of each cell's probe points.

    Columns of `points`/`inside`: fixed probes, random probes, then any
    extra unit nodes (e.g. Gauss nodes) passed to `classify`.
    """

    points: np.ndarray  # (M, P, d)
    inside: np.ndarray  # (M, P)
    lattice_hit: np.ndarray  # (M,)
    extra_start: int

    @property
    def interior(self) -> np.ndarray:
        return self.inside.all(axis=1)

    @property
    def empty(self) -> np.ndarray:
        return ~self.inside.any(axis=1) & ~self.lattice_hit

    @property
    def boundary(self) -> np.ndarray:
        return ~self.interior & ~self.empty


def classify(
    region: Region,
    level: CellLevel,
    layout: ProbeLayout,
    rng: np.random.Generator,
    extra: np.ndarray | None = None,
) -> Probe:
    dim = layout.dim
    random_unit = rng.random((level.size, RANDOM_PROBES, dim))
    unit = np.concatenate([np.broadcast_to(layout.fixed, (level.size,) + layout.fixed.shape), random_unit], axis=1)
    extra_start = unit.shape[1]
    if extra is not None:
        unit = np.concatenate([unit, np.broadcast_to(extra, (level.size,) + extra.shape)], axis=1)
    points = level.points(unit)
    inside = region.contains(points.reshape(-1, dim)).reshape(level.size, -1)
    lattice = level.points(layout.lattice)
    lattice_hit = region.contains(lattice.reshape(-1, dim)).reshape(level.size, -1).any(axis=1)
    return Probe(points, inside, lattice_hit, extra_start)
