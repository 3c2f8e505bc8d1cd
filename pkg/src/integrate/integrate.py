"""Numerical integration of scalar fields over indicator-defined regions.

`refine` walks the dyadic cells of the region's bounding box one level at
a time. Cells whose probes and quadrature nodes all lie in the region are
integrated with a product Gauss rule and accepted when the rule agrees with
its split version; cells that straddle the boundary are split down to the
depth limit and then weighted by their inside fraction. `stochastic` is
stratified uniform sampling over the box. Contributions are summed with a
fixed-shape pairwise tree, so results never depend on evaluation order.
"""
from __future__ import annotations

import itertools
from typing import Optional

import logfire
import numpy as np

from src.errors import DimensionMismatchError, ToleranceNotMetError, WeightError
from src.integrate.estimate import IntegralEstimate
from src.integrate.field import ConstantField, ProductField, ReciprocalField, ScalarField, _strip
from src.integrate.settings import IntegratorSettings, Method
from src.region.cells import CellLevel, Probe, ProbeLayout, ProductRule, classify
from src.region.region import Region

STOCHASTIC_SIGMAS = 3.0


def tree_sum(values: np.ndarray) -> float:
    """Pairwise sum with a shape fixed by the input length."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0])


class _Tally:
    def __init__(self):
        self.values: list[np.ndarray] = []
        self.errs: list[np.ndarray] = []
        self.evals = 0

    def add(self, values: np.ndarray, errs: np.ndarray) -> None:
        self.values.append(np.asarray(values, dtype=float))
        self.errs.append(np.asarray(errs, dtype=float))

    def totals(self) -> tuple[float, float]:
        if not self.values:
            return 0.0, 0.0
        return tree_sum(np.concatenate(self.values)), tree_sum(np.concatenate(self.errs))


def _refine(f: ScalarField, region: Region, settings: IntegratorSettings) -> tuple[float, float, int]:
    dim = region.dim
    depth_limit = settings.depth_for(dim)
    rule = ProductRule.gauss(dim)
    split = rule.split()
    layout = ProbeLayout.for_dim(dim)
    root_volume = region.bounds.volume
    tally = _Tally()

    level = CellLevel.top(region.bounds)
    while level.size:
        at_limit = level.depth >= depth_limit
        probe = classify(region, level, layout, level.rng(settings.seed), extra=rule.nodes)
        tally.evals += probe.inside.size + level.size * len(layout.lattice)
        boundary = probe.boundary.copy()
        volume = level.volume
        carry = np.zeros(level.size, dtype=bool)

        interior = np.flatnonzero(probe.interior)
        if interior.size:
            fine_points = level.select(interior).points(split.nodes)
            fine_inside = region.contains(fine_points.reshape(-1, dim)).reshape(interior.size, -1)
            tally.evals += fine_inside.size
            whole = fine_inside.all(axis=1)
            boundary[interior[~whole]] = True
            cells = interior[whole]
            if cells.size:
                coarse_points = probe.points[cells][:, probe.extra_start:, :]
                coarse_values = f(coarse_points.reshape(-1, dim)).reshape(cells.size, -1)
                fine_values = f(fine_points[whole].reshape(-1, dim)).reshape(cells.size, -1)
                tally.evals += coarse_values.size + fine_values.size
                coarse = volume * np.sum(coarse_values * rule.weights, axis=1)
                fine = volume * np.sum(fine_values * split.weights, axis=1)
                diff = np.abs(fine - coarse)
                tol = np.maximum(settings.abs_tol * volume / root_volume, settings.rel_tol * np.abs(fine))
                accept = (diff <= tol) | at_limit
                tally.add(fine[accept], diff[accept])
                carry[cells[~accept]] = True

        if at_limit:
            cells = np.flatnonzero(boundary)
            if cells.size:
                tally.add(*_boundary_cells(f, region, level, probe, cells, rule, layout))
                tally.evals += int(np.count_nonzero(probe.inside[cells]))
            break
        level = level.select(carry | boundary).children()

    value, err = tally.totals()
    return value, err, tally.evals


def _boundary_cells(
    f: ScalarField,
    region: Region,
    level: CellLevel,
    probe: Probe,
    cells: np.ndarray,
    rule: ProductRule,
    layout: ProbeLayout,
):
    """Inside-fraction weighting at the depth limit; err is the cell's full |f|·volume.

    A cell reached only through its lattice has no inside sample to take
    |f| from, so it is charged the declared sup|f|, else the largest |f|
    seen on any limit cell or on its own lattice points.
    """
    volume = level.volume
    inside = probe.inside[cells]
    points = probe.points[cells]
    values = np.zeros(inside.shape)
    if inside.any():
        values[inside] = f(points[inside])
    fraction = np.sum(inside[:, probe.extra_start:] * rule.weights, axis=1)
    count = inside.sum(axis=1)
    mean = np.sum(values, axis=1) / np.maximum(count, 1)
    col = layout.centroid_column
    representative = np.where(inside[:, col], values[:, col], mean)
    err = volume * np.max(np.abs(values), axis=1)

    blind = count == 0
    if blind.any():
        sup = f.sup_abs()
        if sup is None:
            lattice = level.select(cells[blind]).points(layout.lattice).reshape(-1, layout.dim)
            lattice = lattice[region.contains(lattice)]
            seen = np.abs(values).max(initial=0.0)
            sup = max(float(seen), float(np.abs(f(lattice)).max(initial=0.0)))
        err[blind] = volume * sup
    return volume * fraction * representative, err


def _stochastic(f: ScalarField, region: Region, settings: IntegratorSettings) -> tuple[float, float, int]:
    dim = region.dim
    box = region.bounds
    n = settings.sample_count
    per_axis = max(1, int((n / 2) ** (1.0 / dim)))
    strata = np.array(list(itertools.product(range(per_axis), repeat=dim)), dtype=float)
    per_stratum = max(2, n // len(strata))

    rng = np.random.default_rng(settings.seed)
    unit = (strata[:, None, :] + rng.random((len(strata), per_stratum, dim))) / per_axis
    points = (box.low + unit * box.width).reshape(-1, dim)
    inside = region.contains(points)
    values = np.zeros(len(points))
    if inside.any():
        values[inside] = f(points[inside])

    total = len(points)
    mean = tree_sum(values) / total
    std = float(np.std(values, ddof=1))
    value = box.volume * mean
    err = STOCHASTIC_SIGMAS * box.volume * std / np.sqrt(total)
    return value, err, total + int(np.count_nonzero(inside))


def integrate(
    f: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings] = None,
) -> IntegralEstimate:
    settings = settings or IntegratorSettings()
    if f.dim != region.dim:
        raise DimensionMismatchError(f"cannot integrate a dim-{f.dim} field over a dim-{region.dim} region")

    with logfire.span("integrate {field}", field=f.label, method=settings.method, dim=region.dim):
        match settings.method:
            case Method.refine:
                value, err, evals = _refine(f, region, settings)
                seed = None
            case Method.stochastic:
                value, err, evals = _stochastic(f, region, settings)
                seed = settings.seed

        if err > settings.tolerance_for(value):
            message = f"tolerance not met for '{f.label}': value {value!r}, err {err!r}"
            if settings.strict:
                raise ToleranceNotMetError(message)
            logfire.debug(message)

    return IntegralEstimate(value=value, err=err, evals=evals, method=settings.method, seed=seed)


def is_positive_weight(w: ScalarField) -> bool:
    return w.floor is not None or isinstance(_strip(w), ReciprocalField)


def inner_product(
    u: ScalarField,
    v: ScalarField,
    w: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings] = None,
    *,
    weight: bool = True,
) -> IntegralEstimate:
    """∫ u·v·w over the region; `w` must carry a positivity floor when used as a weight."""
    if weight and not is_positive_weight(w):
        raise WeightError(f"weight '{w.label}' has no declared positivity floor")
    return integrate(ProductField([u, v, w]), region, settings)


def measure(region: Region, settings: Optional[IntegratorSettings] = None) -> IntegralEstimate:
    return integrate(ConstantField(1.0, region.dim), region, settings)
