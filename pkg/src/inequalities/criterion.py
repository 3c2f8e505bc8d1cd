"""Sufficient condition for ∫fg >= ∫f · ∫g via the Fourier coefficients of f and g.

For families Φ (weight 1/f) and Ψ (weight 1/g) with coefficients c_n, d_m,
the criterion asks for every (n, m) that

    A: ∫ φ_n²ψ_m²/(fg) <= ∫φ_n²/f · ∫ψ_m²/g
    B: c_n d_m ∫φ_nψ_m >= c_n d_m ∫φ_n · ∫ψ_m

with the factor c_n d_m kept on both sides of B.
"""
from __future__ import annotations

from typing import Optional

import logfire
from pydantic import BaseModel, ConfigDict, computed_field

from src.errors import DimensionMismatchError, RegionError, TruncationError
from src.expansion.fourier import EXISTENCE_SCALE, Expansion, expand, mean_square_deviation
from src.integrate.estimate import Comparison, Estimate, IntegralEstimate, compare
from src.integrate.field import ProductField, ScalarField, combine
from src.integrate.integrate import integrate, measure
from src.integrate.settings import IntegratorSettings
from src.ortho.family import OrthogonalFamily


class GridCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    m: int
    crit_a: Comparison
    crit_b: Comparison

    @computed_field
    @property
    def crit_a_holds(self) -> bool:
        return self.crit_a.holds

    @computed_field
    @property
    def crit_b_holds(self) -> bool:
        return self.crit_b.holds

    @computed_field
    @property
    def both(self) -> bool:
        return self.crit_a.holds and self.crit_b.holds

    def flags(self) -> str:
        return "".join("1" if x else "0" for x in (self.crit_a_holds, self.crit_b_holds, self.both))


class ChainLink(BaseModel):
    """One step of the product-deviation chain; only asserted links count as violations."""

    model_config = ConfigDict(frozen=True)

    name: str
    check: Comparison
    asserted: bool


class CriterionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    truncation: int
    grid: list[GridCell]
    int_f: Estimate
    int_g: Estimate
    int_fg: Estimate
    int_f_times_int_g: Estimate
    conclusion: Comparison
    measure: Estimate
    f_deviation: Estimate
    g_deviation: Estimate
    f_complete: bool
    g_complete: bool
    chain: list[ChainLink] = []
    violations: list[str] = []

    @computed_field
    @property
    def all_criteria_hold(self) -> bool:
        return all(c.both for c in self.grid)

    @computed_field
    @property
    def contrapositive_ok(self) -> bool:
        return self.conclusion.holds or not self.all_criteria_hold

    def csv_rows(self) -> list[list[str]]:
        """Rows n, columns m, each cell the (A, B, both) flag triple."""
        by_index = {(c.n, c.m): c for c in self.grid}
        size = self.truncation
        rows = [["n\\m", *[str(m) for m in range(1, size + 1)]]]
        for n in range(1, size + 1):
            rows.append([str(n), *[by_index[(n, m)].flags() for m in range(1, size + 1)]])
        return rows


def _check_pair(f: ScalarField, g: ScalarField, phi: OrthogonalFamily, psi: OrthogonalFamily, n: int) -> None:
    if f.dim != g.dim:
        raise DimensionMismatchError(f"f has dimension {f.dim}, g has {g.dim}")
    if phi.region is not psi.region and phi.region.describe() != psi.region.describe():
        raise RegionError("the two families live on different regions")
    if not 1 <= n <= min(phi.size, psi.size):
        raise TruncationError(f"truncation {n} is outside 1..{min(phi.size, psi.size)}")


def _crit_a_lhs(a: ScalarField, b: ScalarField, x: Expansion, y: Expansion, settings) -> IntegralEstimate:
    return integrate(ProductField([a, a, b, b, x.weight, y.weight]), x.region, settings)


def _complete(x: Expansion, f: ScalarField) -> tuple[Estimate, bool]:
    msd = mean_square_deviation(f, x, x.size)
    return Estimate.of(msd), msd.value <= EXISTENCE_SCALE * abs(x.integral.value)


def _chain(
    f: ScalarField,
    g: ScalarField,
    x: Expansion,
    y: Expansion,
    n: int,
    int_fg: Estimate,
    crit_a_lhs: dict[tuple[int, int], Estimate],
    criteria_hold: bool,
    settings: IntegratorSettings,
) -> list[ChainLink]:
    tol = settings.abs_tol
    s, t = x.partial_sum(n), y.partial_sum(n)
    st = ProductField([s, t])
    residual = combine([ProductField([f, g]), st], [1.0, -1.0])
    product_deviation = Estimate.of(integrate(ProductField([residual, residual, x.weight, y.weight]), x.region, settings))

    cross = Estimate.exact(0.0)
    cross_criterion = Estimate.exact(0.0)
    quad_split = Estimate.exact(0.0)
    quad_criterion = Estimate.exact(0.0)
    bessel_terms = Estimate.exact(0.0)
    for i in range(n):
        for j in range(n):
            cd = x.coefficients[i] * y.coefficients[j]
            phi, psi = x.family.members[i], y.family.members[j]
            cross = cross + cd * Estimate.of(integrate(ProductField([phi, psi]), x.region, settings))
            cross_criterion = cross_criterion + cd * (x.numerators[i] * y.numerators[j])
            quad_split = quad_split + cd.square() * crit_a_lhs[(i + 1, j + 1)]
            quad_criterion = quad_criterion + cd.square() * (x.denominators[i] * y.denominators[j])
            bessel_terms = bessel_terms + (x.numerators[i] * y.numerators[j]).square() / (
                x.denominators[i] * y.denominators[j]
            )

    quad_joint = Estimate.of(integrate(ProductField([st, st, x.weight, y.weight]), x.region, settings))
    expanded = int_fg - 2 * cross + quad_joint
    split_sum = int_fg - 2 * cross + quad_split
    criterion_bound = int_fg - 2 * cross_criterion + quad_criterion
    double_bessel = int_fg - bessel_terms
    f_terms = sum(x.parseval_terms(n), Estimate.exact(0.0))
    g_terms = sum(y.parseval_terms(n), Estimate.exact(0.0))

    def same(a: Estimate, b: Estimate) -> Comparison:
        d = a - b
        return compare(Estimate(value=abs(d.value), err=d.err), 0.0, tol)

    single = n == 1
    return [
        ChainLink(name="product deviation is nonnegative", check=compare(0.0, product_deviation, tol), asserted=True),
        ChainLink(name="product deviation equals its expansion", check=same(product_deviation, expanded), asserted=True),
        ChainLink(name="expansion <= split double sum", check=compare(expanded, split_sum, tol), asserted=single),
        ChainLink(
            name="split double sum <= criterion bound",
            check=compare(split_sum, criterion_bound, tol),
            asserted=criteria_hold,
        ),
        ChainLink(name="criterion bound equals double Bessel bound", check=same(criterion_bound, double_bessel), asserted=True),
        ChainLink(
            name="product deviation <= double Bessel bound",
            check=compare(product_deviation, double_bessel, tol),
            asserted=single and criteria_hold,
        ),
        ChainLink(
            name="factorized Bessel product <= integral of fg",
            check=compare(f_terms * g_terms, int_fg, tol),
            asserted=single and criteria_hold,
        ),
    ]


def product_criterion_check(
    f: ScalarField,
    g: ScalarField,
    phi: OrthogonalFamily,
    psi: OrthogonalFamily,
    n: int,
    settings: Optional[IntegratorSettings] = None,
    *,
    diagnostics: bool = False,
) -> CriterionReport:
    _check_pair(f, g, phi, psi, n)
    settings = settings or IntegratorSettings()
    tol = settings.abs_tol
    region = phi.region
    with logfire.span("product_criterion_check", f=f.label, g=g.label, truncation=n):
        x = expand(f, phi, settings)
        y = expand(g, psi, settings)

        grid: list[GridCell] = []
        crit_a_lhs: dict[tuple[int, int], Estimate] = {}
        for i in range(n):
            for j in range(n):
                a, b = phi.members[i], psi.members[j]
                lhs_a = Estimate.of(_crit_a_lhs(a, b, x, y, settings))
                crit_a_lhs[(i + 1, j + 1)] = lhs_a
                cd = x.coefficients[i] * y.coefficients[j]
                joint = Estimate.of(integrate(ProductField([a, b]), region, settings))
                grid.append(
                    GridCell(
                        n=i + 1,
                        m=j + 1,
                        crit_a=compare(lhs_a, x.denominators[i] * y.denominators[j], tol),
                        crit_b=compare(cd * (x.numerators[i] * y.numerators[j]), cd * joint, tol),
                    )
                )

        int_f, int_g = Estimate.of(x.integral), Estimate.of(y.integral)
        int_fg = Estimate.of(integrate(ProductField([f, g]), region, settings))
        product = int_f * int_g
        conclusion = compare(product, int_fg, tol)
        f_dev, f_complete = _complete(x, f)
        g_dev, g_complete = _complete(y, g)

        strict = all(c.crit_a.strict and c.crit_b.strict for c in grid)
        violations = []
        if strict and f_complete and g_complete and not conclusion.holds:
            violations.append("every criterion holds strictly for complete expansions but the conclusion fails")

        chain: list[ChainLink] = []
        if diagnostics:
            criteria_hold = all(c.both for c in grid)
            chain = _chain(f, g, x, y, n, int_fg, crit_a_lhs, criteria_hold, settings)
            violations.extend(f"chain link '{c.name}' fails" for c in chain if c.asserted and not c.check.holds)

        report = CriterionReport(
            truncation=n,
            grid=grid,
            int_f=int_f,
            int_g=int_g,
            int_fg=int_fg,
            int_f_times_int_g=product,
            conclusion=conclusion,
            measure=Estimate.of(measure(region, settings)),
            f_deviation=f_dev,
            g_deviation=g_dev,
            f_complete=f_complete,
            g_complete=g_complete,
            chain=chain,
            violations=violations,
        )
        for v in violations:
            logfire.warn(v)
    return report


class CorollaryCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    m: int
    # ∫φ²ψ²/(fg) <= sqrt(∫φ⁴/f² · ∫ψ⁴/g²)
    bound: Comparison
    certifies_crit_a: bool


class SubCondition(BaseModel):
    """∫φ⁴/f² <= (∫φ²/f)² for one family member."""

    model_config = ConfigDict(frozen=True)

    family: str
    index: int
    check: Comparison


class CorollaryReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    truncation: int
    grid: list[CorollaryCell]
    sub_conditions: list[SubCondition]
    violations: list[str] = []


def _fourth_moment(member: ScalarField, x: Expansion, settings) -> Estimate:
    return Estimate.of(integrate(ProductField([member] * 4 + [x.weight, x.weight]), x.region, settings))


def corollary_check(
    f: ScalarField,
    g: ScalarField,
    phi: OrthogonalFamily,
    psi: OrthogonalFamily,
    n: int,
    settings: Optional[IntegratorSettings] = None,
) -> CorollaryReport:
    """Cauchy-Schwarz bound on the criterion-A integrand, and the per-member conditions that make it certify A."""
    _check_pair(f, g, phi, psi, n)
    settings = settings or IntegratorSettings()
    tol = settings.abs_tol
    with logfire.span("corollary_check", f=f.label, g=g.label, truncation=n):
        x = expand(f, phi, settings)
        y = expand(g, psi, settings)
        p4 = [_fourth_moment(m, x, settings) for m in phi.members[:n]]
        q4 = [_fourth_moment(m, y, settings) for m in psi.members[:n]]
        subs_f = [compare(p4[i], x.denominators[i].square(), tol) for i in range(n)]
        subs_g = [compare(q4[j], y.denominators[j].square(), tol) for j in range(n)]

        grid = []
        for i in range(n):
            for j in range(n):
                lhs = Estimate.of(_crit_a_lhs(phi.members[i], psi.members[j], x, y, settings))
                grid.append(
                    CorollaryCell(
                        n=i + 1,
                        m=j + 1,
                        bound=compare(lhs, (p4[i] * q4[j]).sqrt(), tol),
                        certifies_crit_a=subs_f[i].holds and subs_g[j].holds,
                    )
                )
        violations = [
            f"Cauchy-Schwarz bound fails at (n={c.n}, m={c.m})" for c in grid if not c.bound.holds
        ]
        sub_conditions = [SubCondition(family="phi", index=i + 1, check=c) for i, c in enumerate(subs_f)]
        sub_conditions += [SubCondition(family="psi", index=j + 1, check=c) for j, c in enumerate(subs_g)]
        for v in violations:
            logfire.warn(v)
    return CorollaryReport(truncation=n, grid=grid, sub_conditions=sub_conditions, violations=violations)
