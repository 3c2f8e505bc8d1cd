"""Sign partition of a region: dyadic cells on which a field has one sign."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import logfire
import numpy as np

from src.errors import DimensionMismatchError, RegionError
from src.integrate.field import ScalarField
from src.region.cells import CellLevel, ProbeLayout, classify
from src.region.region import CellRegion, Region

ZETA_SCALE = 1e-9


class Sign(IntEnum):
    negative = -1
    zero = 0
    positive = 1

    @property
    def symbol(self) -> str:
        return {Sign.negative: "-", Sign.zero: "0", Sign.positive: "+"}[self]


@dataclass(frozen=True)
class PartitionCell:
    cell_id: int
    region: CellRegion
    sign: Sign

    @property
    def volume_bound(self) -> float:
        return self.region.bounds.volume


@dataclass(frozen=True)
class SignPartition:
    parent: Region
    field: ScalarField
    zeta: float
    max_depth: int
    seed: int
    cells: tuple[PartitionCell, ...]
    unresolved: tuple[CellRegion, ...]
    # Largest |f| seen on a member probe of any unresolved cell.
    unresolved_sup: float

    @property
    def unresolved_volume(self) -> float:
        return float(sum(u.bounds.volume for u in self.unresolved))

    def grouped(self) -> dict[Sign, list[PartitionCell]]:
        out: dict[Sign, list[PartitionCell]] = defaultdict(list)
        for cell in self.cells:
            out[cell.sign].append(cell)
        return {s: out[s] for s in (Sign.positive, Sign.negative, Sign.zero) if out[s]}

    def sup_bound(self) -> float:
        """|f| bound used to turn unresolved volume into an error term."""
        declared = self.field.sup_abs()
        return declared if declared is not None else self.unresolved_sup

    def claims(self, points: np.ndarray) -> np.ndarray:
        """How many cells (signed or unresolved) contain each point."""
        count = np.zeros(len(points), dtype=np.int64)
        for cell in self.cells:
            count += cell.region.contains(points)
        for u in self.unresolved:
            count += u.contains(points)
        return count


def default_zeta(f: ScalarField) -> float:
    return ZETA_SCALE * (f.sup_abs() or 1.0)


def _sign_codes(values: np.ndarray, zeta: float) -> np.ndarray:
    return np.where(values > zeta, 1, np.where(values < -zeta, -1, 0)).astype(np.int8)


def sign_partition(
    f: ScalarField,
    region: Region,
    max_depth: int,
    zeta: Optional[float] = None,
    seed: int = 0,
) -> SignPartition:
    """Split `region` into dyadic cells tagged +1, -1 or 0 by the sign of `f`.

    A cell is tagged once every probe point inside the region agrees on a
    sign code; disagreeing cells are split until `max_depth` and then kept
    as unresolved. Cells that no probe or lattice point reaches are dropped.
    """
    if f.dim != region.dim:
        raise DimensionMismatchError(f"field of dimension {f.dim} on a dim-{region.dim} region")
    if max_depth < 1:
        raise RegionError(f"max_depth must be >= 1, got {max_depth}")
    zeta = default_zeta(f) if zeta is None else float(zeta)
    if not zeta > 0:
        raise RegionError(f"zero threshold must be > 0, got {zeta}")

    layout = ProbeLayout.for_dim(region.dim)
    cells: list[PartitionCell] = []
    unresolved: list[CellRegion] = []
    unresolved_sup = 0.0

    with logfire.span("sign_partition {field}", field=f.label, max_depth=max_depth, zeta=zeta):
        level = CellLevel.top(region.bounds)
        while level.size:
            probe = classify(region, level, layout, level.rng(seed))
            values = np.zeros(probe.inside.shape)
            if probe.inside.any():
                values[probe.inside] = f(probe.points[probe.inside])
            codes = _sign_codes(values, zeta)
            hi = np.where(probe.inside, codes, -2).max(axis=1)
            lo = np.where(probe.inside, codes, 2).min(axis=1)
            agree = probe.inside.any(axis=1) & (hi == lo)
            live = ~probe.empty

            for i in np.flatnonzero(live & agree):
                sign = Sign(int(hi[i]))
                cid = len(cells) + 1
                cells.append(PartitionCell(cid, level.cell_region(i, region, f"cell {cid} ({sign.symbol})"), sign))

            split = live & ~agree
            if level.depth == max_depth:
                for i in np.flatnonzero(split):
                    unresolved.append(level.cell_region(i, region, f"unresolved {len(unresolved) + 1}"))
                    member = np.abs(values[i][probe.inside[i]])
                    if member.size:
                        unresolved_sup = max(unresolved_sup, float(member.max()))
                break
            level = level.select(split).children()

        partition = SignPartition(
            parent=region,
            field=f,
            zeta=zeta,
            max_depth=max_depth,
            seed=seed,
            cells=tuple(cells),
            unresolved=tuple(unresolved),
            unresolved_sup=unresolved_sup,
        )
        logfire.debug(
            "partition: {n_cells} signed cells, {n_unresolved} unresolved",
            n_cells=len(cells),
            n_unresolved=len(unresolved),
            unresolved_volume=partition.unresolved_volume,
        )
    return partition

