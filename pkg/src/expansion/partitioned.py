"""Integration of a sign-changing field as a sum of per-cell Parseval sums.

On a +1 cell the field itself is expanded; on a -1 cell its negation is,
and the cell's sum is negated back. Zero cells contribute nothing. The
total is compared with the directly integrated field, with the unresolved
cells' volume times sup|f| added to the allowed discrepancy.

A signed cell whose quadrature nodes contradict its tag cannot carry the
floored weight; it is demoted and counted with the unresolved cells.
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

import logfire
import numpy as np
from pydantic import BaseModel, ConfigDict

from src.errors import DimensionMismatchError, WeightError
from src.expansion.fourier import expand
from src.integrate.estimate import Comparison, Estimate, compare
from src.integrate.field import ScalarField
from src.integrate.integrate import integrate
from src.integrate.settings import IntegratorSettings
from src.ortho.family import gram_schmidt
from src.region.cells import ProductRule
from src.region.partition import PartitionCell, Sign, SignPartition


class CellParseval(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell_id: int
    sign: int
    cell: str
    members: list[str]
    dropped: list[int]
    coefficients: list[Estimate]
    cell_parseval: Estimate
    cell_integral: Estimate


class PartitionedParseval(BaseModel):
    model_config = ConfigDict(frozen=True)

    cells: list[CellParseval]
    # Signed cells whose quadrature nodes contradicted the tag.
    demoted_cells: list[int]
    total: Estimate
    direct_integral: Estimate
    discrepancy: Estimate
    unresolved_volume: float
    unresolved_cells: int
    # unresolved_volume · sup|f|
    unresolved_bound: float
    bound: float
    agreement: Comparison

    @property
    def violated(self) -> bool:
        return not self.agreement.holds


def _cell_field(f: ScalarField, sign: Sign, zeta: float) -> ScalarField:
    """The positive field expanded on a signed cell, floored at the zero threshold."""
    positive = f if sign is Sign.positive else -f
    return positive.with_floor(zeta)


def _sampled_sup(f: ScalarField, cell: PartitionCell) -> float:
    box = cell.region.bounds
    points = box.low + ProductRule.gauss(box.dim).split().nodes * box.width
    inside = cell.region.contains(points)
    if not inside.any():
        return 0.0
    return float(np.max(np.abs(f(points[inside]))))


def _expand_cell(
    f: ScalarField,
    cell: PartitionCell,
    seeds: Optional[Sequence[ScalarField]],
    zeta: float,
    settings: IntegratorSettings,
) -> Optional[CellParseval]:
    integral = Estimate.of(integrate(f, cell.region, settings))
    if cell.sign is Sign.zero:
        return CellParseval(
            cell_id=cell.cell_id,
            sign=int(cell.sign),
            cell=cell.region.bounds.describe(),
            members=[],
            dropped=[],
            coefficients=[],
            cell_parseval=Estimate.exact(0.0),
            cell_integral=integral,
        )

    g = _cell_field(f, cell.sign, zeta)
    try:
        family = gram_schmidt(list(seeds) if seeds else [g], g.reciprocal(), cell.region, settings)
        expansion = expand(g, family, settings)
    except WeightError as e:
        logfire.info("demoting {cell}: {error}", cell=cell.region.label, error=str(e))
        return None
    total = sum(expansion.parseval_terms(), Estimate.exact(0.0))
    if cell.sign is Sign.negative:
        total = -total
    return CellParseval(
        cell_id=cell.cell_id,
        sign=int(cell.sign),
        cell=cell.region.bounds.describe(),
        members=family.labels(),
        dropped=list(family.dropped),
        coefficients=list(expansion.coefficients),
        cell_parseval=total,
        cell_integral=integral,
    )


def partitioned_parseval(
    f: ScalarField,
    partition: SignPartition,
    seed_sets: Optional[Mapping[int, Sequence[ScalarField]]] = None,
    settings: Optional[IntegratorSettings] = None,
    *,
    default_seeds: Optional[Sequence[ScalarField]] = None,
) -> PartitionedParseval:
    """Sum the per-cell Parseval sums over a sign partition of `f`'s region.

    `seed_sets` maps a cell id to that cell's seeds; cells without an entry
    use `default_seeds`, and failing that the cell's own positive field,
    which makes every cell's expansion exact.
    """
    if f.dim != partition.parent.dim:
        raise DimensionMismatchError(f"field of dimension {f.dim} on a dim-{partition.parent.dim} partition")
    settings = settings or IntegratorSettings()
    seed_sets = seed_sets or {}
    with logfire.span("partitioned_parseval {field}", field=f.label, cells=len(partition.cells)):
        cells: list[CellParseval] = []
        demoted: list[PartitionCell] = []
        for cell in partition.cells:
            result = _expand_cell(f, cell, seed_sets.get(cell.cell_id, default_seeds), partition.zeta, settings)
            if result is None:
                demoted.append(cell)
            else:
                cells.append(result)

        total = sum((c.cell_parseval for c in cells), Estimate.exact(0.0))
        direct_integral = Estimate.of(integrate(f, partition.parent, settings))
        discrepancy = total - direct_integral

        demoted_volume = float(sum(c.volume_bound for c in demoted))
        demoted_sup = f.sup_abs()
        if demoted_sup is None:
            demoted_sup = max((_sampled_sup(f, c) for c in demoted), default=0.0)
        unresolved_volume = partition.unresolved_volume + demoted_volume
        unresolved_bound = partition.unresolved_volume * partition.sup_bound() + demoted_volume * demoted_sup

        agreement = compare(
            Estimate(value=abs(discrepancy.value), err=discrepancy.err),
            0.0,
            settings.abs_tol + unresolved_bound,
        )
        result = PartitionedParseval(
            cells=cells,
            demoted_cells=[c.cell_id for c in demoted],
            total=total,
            direct_integral=direct_integral,
            discrepancy=discrepancy,
            unresolved_volume=unresolved_volume,
            unresolved_cells=len(partition.unresolved) + len(demoted),
            unresolved_bound=unresolved_bound,
            bound=discrepancy.err + settings.abs_tol + unresolved_bound,
            agreement=agreement,
        )
        if result.violated:
            logfire.warn("partitioned total {total} disagrees with the direct integral", total=total.value)
    return result
