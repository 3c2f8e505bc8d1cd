"""Integral Cauchy-Schwarz: (∫g²)(∫h²) - (∫gh)² >= 0, checked numerically."""
from __future__ import annotations

from typing import Optional

import logfire
from pydantic import BaseModel, ConfigDict

from src.errors import DimensionMismatchError
from src.integrate.estimate import Comparison, Estimate, Verdict, compare
from src.integrate.field import ScalarField
from src.integrate.integrate import integrate, measure
from src.integrate.settings import IntegratorSettings
from src.region.partition import default_zeta
from src.region.region import Region, SupportRegion


class SupportSplit(BaseModel):
    """Integrals restricted to D = {x in E : |g| > zeta and |h| > zeta}."""

    model_config = ConfigDict(frozen=True)

    zeta: float
    measure_d: Estimate
    int_gh_d: Estimate
    int_g2_d: Estimate
    int_h2_d: Estimate
    # ∫_E gh = ∫_D gh
    gh_unchanged: Comparison
    # ∫_D g² <= ∫_E g², likewise for h
    g2_dominates: Comparison
    h2_dominates: Comparison
    # (∫_D gh)² <= (∫_D g²)(∫_D h²)
    on_support: Comparison


class CauchySchwarzResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    int_g2: Estimate
    int_h2: Estimate
    int_gh: Estimate
    gap: Estimate
    check: Comparison
    split: Optional[SupportSplit] = None

    @property
    def verdict(self) -> Verdict:
        return self.check.verdict

    def violations(self) -> list[str]:
        out = []
        if not self.check.holds:
            out.append(f"Cauchy-Schwarz gap {self.gap.value!r} is below -{self.check.slack!r}")
        if self.split is not None:
            for name in ("gh_unchanged", "g2_dominates", "h2_dominates", "on_support"):
                if not getattr(self.split, name).holds:
                    out.append(f"support split check '{name}' fails")
        return out


def _gap(g2: Estimate, h2: Estimate, gh: Estimate) -> Estimate:
    # err = |B|ΔA + |A|ΔB + 2|C|ΔC
    return g2 * h2 - gh.square()


def _support_split(
    g: ScalarField,
    h: ScalarField,
    region: Region,
    settings: IntegratorSettings,
    zeta: float,
    whole: tuple[Estimate, Estimate, Estimate],
) -> SupportSplit:
    support = SupportRegion(region, [g, h], zeta)
    g2, h2, gh = whole
    g2_d = Estimate.of(integrate(g * g, support, settings))
    h2_d = Estimate.of(integrate(h * h, support, settings))
    gh_d = Estimate.of(integrate(g * h, support, settings))
    diff = gh - gh_d
    tol = settings.abs_tol
    return SupportSplit(
        zeta=zeta,
        measure_d=Estimate.of(measure(support, settings)),
        int_gh_d=gh_d,
        int_g2_d=g2_d,
        int_h2_d=h2_d,
        gh_unchanged=compare(Estimate(value=abs(diff.value), err=diff.err), 0.0, tol),
        g2_dominates=compare(g2_d, g2, tol),
        h2_dominates=compare(h2_d, h2, tol),
        on_support=compare(0.0, _gap(g2_d, h2_d, gh_d), tol),
    )


def cauchy_schwarz_gap(
    g: ScalarField,
    h: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings] = None,
    *,
    split: bool = False,
    zeta: Optional[float] = None,
) -> CauchySchwarzResult:
    """(∫g²)(∫h²) - (∫gh)² with propagated error; `split` adds the D / E∖D diagnostics."""
    for field in (g, h):
        if field.dim != region.dim:
            raise DimensionMismatchError(f"'{field.label}' has dimension {field.dim}, region has {region.dim}")
    settings = settings or IntegratorSettings()
    with logfire.span("cauchy_schwarz_gap", g=g.label, h=h.label):
        g2 = Estimate.of(integrate(g * g, region, settings))
        h2 = Estimate.of(integrate(h * h, region, settings))
        gh = Estimate.of(integrate(g * h, region, settings))
        gap = _gap(g2, h2, gh)
        check = compare(0.0, gap, settings.abs_tol)
        support = None
        if split:
            if zeta is None:
                zeta = max(default_zeta(g), default_zeta(h))
            support = _support_split(g, h, region, settings, zeta, (g2, h2, gh))
        logfire.debug("Cauchy-Schwarz gap {gap}: {verdict}", gap=gap.value, verdict=check.verdict)
    return CauchySchwarzResult(int_g2=g2, int_h2=h2, int_gh=gh, gap=gap, check=check, split=support)
