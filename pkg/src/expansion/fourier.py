"""Fourier coefficients of a positive field against a family weighted by its reciprocal.

With weight 1/f the coefficient of φ_n is (∫φ_n)/(∫φ_n²/f), the partial sum
is s_N = Σ c_n φ_n, and the mean-square deviation ∫(f - s_N)²/f equals the
Bessel gap ∫f - Σ (∫φ_n)²/(∫φ_n²/f) whenever the family is orthogonal.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import logfire
from pydantic import BaseModel, ConfigDict

from src.errors import IntegrationError, TruncationError, WeightError
from src.integrate.estimate import Comparison, Estimate, IntegralEstimate, compare
from src.integrate.field import ConstantField, ReciprocalField, ScalarField, _strip, combine
from src.integrate.integrate import inner_product, integrate
from src.integrate.settings import IntegratorSettings
from src.ortho.family import OrthogonalFamily
from src.region.region import Region

EXISTENCE_SCALE = 1e-6


def _require_floor(f: ScalarField) -> None:
    if f.floor is None:
        raise WeightError(f"'{f.label}' needs a declared positivity floor to be expanded")


def _ratio(num: Estimate, den: Estimate, label: str) -> Estimate:
    if not den.distinguishable_from_zero():
        raise IntegrationError(
            f"denominator of the coefficient of '{label}' is indistinguishable from zero "
            f"({den.value!r} ± {den.err!r})"
        )
    return num / den


def fourier_coefficient(
    phi: ScalarField,
    f: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings] = None,
) -> Estimate:
    """c = (∫φ) / (∫φ²/f) with first-order propagated error."""
    _require_floor(f)
    num = integrate(phi, region, settings)
    den = inner_product(phi, phi, f.reciprocal(), region, settings)
    return _ratio(num, den, phi.label)


@dataclass(frozen=True)
class Expansion:
    f: ScalarField
    family: OrthogonalFamily
    integral: IntegralEstimate
    numerators: tuple[IntegralEstimate, ...]
    denominators: tuple[IntegralEstimate, ...]
    coefficients: tuple[Estimate, ...]
    settings: IntegratorSettings

    @property
    def size(self) -> int:
        return len(self.coefficients)

    @property
    def region(self) -> Region:
        return self.family.region

    @property
    def weight(self) -> ScalarField:
        return self.family.weight

    @property
    def coeffs(self) -> list[float]:
        return [c.value for c in self.coefficients]

    def check_truncation(self, n: int) -> None:
        if not 0 <= n <= self.size:
            raise TruncationError(f"truncation {n} is outside 0..{self.size}")

    def partial_sum(self, n: int) -> ScalarField:
        self.check_truncation(n)
        if n == 0:
            return ConstantField(0.0, self.f.dim)
        return combine(list(self.family.members[:n]), self.coeffs[:n])

    def parseval_terms(self, n: Optional[int] = None) -> list[Estimate]:
        """(∫φ_n)²/(∫φ_n²/f) for the first n members, i.e. c_n² ∫φ_n²/f."""
        n = self.size if n is None else n
        self.check_truncation(n)
        return [c.square() * d for c, d in zip(self.coefficients[:n], self.denominators[:n])]

    def perturbed(self, index: int, delta: float) -> "Expansion":
        """The same expansion with c_index (1-based) shifted by `delta`."""
        coeffs = list(self.coefficients)
        coeffs[index - 1] = coeffs[index - 1] + delta
        return replace(self, coefficients=tuple(coeffs))


def expand(f: ScalarField, family: OrthogonalFamily, settings: Optional[IntegratorSettings] = None) -> Expansion:
    _require_floor(f)
    weight = _strip(family.weight)
    if not (isinstance(weight, ReciprocalField) and weight.is_reciprocal_of(f)):
        raise WeightError(f"family weight '{family.weight.label}' is not 1/({f.label})")
    settings = settings or IntegratorSettings()
    region = family.region
    with logfire.span("expand {field}", field=f.label, members=family.size):
        integral = integrate(f, region, settings)
        numerators = tuple(integrate(m, region, settings) for m in family.members)
        denominators = tuple(inner_product(m, m, family.weight, region, settings) for m in family.members)
        coefficients = tuple(_ratio(n, d, m.label) for n, d, m in zip(numerators, denominators, family.members))
    return Expansion(f, family, integral, numerators, denominators, coefficients, settings)


def mean_square_deviation(f: ScalarField, expansion: Expansion, n: int) -> IntegralEstimate:
    """∫ (f - s_n)² / f over the expansion's region."""
    residual = combine([f, expansion.partial_sum(n)], [1.0, -1.0])
    return inner_product(residual, residual, expansion.weight, expansion.region, expansion.settings)


def bessel_gap(f: ScalarField, expansion: Expansion, n: int) -> Estimate:
    """∫f - Σ_{k<=n} (∫φ_k)²/(∫φ_k²/f)."""
    expansion.check_truncation(n)
    return expansion.integral - sum(expansion.parseval_terms(n), Estimate.exact(0.0))


class DeviationStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    deviation: Estimate
    bessel_gap: Estimate
    identity: Comparison
    gap_nonnegative: Comparison


class DeviationProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: list[DeviationStep]
    gap_nonincreasing: bool


def deviation_profile(f: ScalarField, expansion: Expansion) -> DeviationProfile:
    """Deviation and Bessel gap for every truncation 0..K, with their identity and sign checks."""
    abs_tol = expansion.settings.abs_tol
    steps = []
    for n in range(expansion.size + 1):
        msd = mean_square_deviation(f, expansion, n)
        gap = bessel_gap(f, expansion, n)
        diff = msd - gap
        steps.append(
            DeviationStep(
                n=n,
                deviation=Estimate.of(msd),
                bessel_gap=gap,
                identity=compare(Estimate(value=abs(diff.value), err=diff.err), 0.0, abs_tol),
                gap_nonnegative=compare(0.0, gap, abs_tol),
            )
        )
    gaps = [s.bessel_gap.value for s in steps]
    return DeviationProfile(steps=steps, gap_nonincreasing=all(b <= a for a, b in zip(gaps, gaps[1:])))


class ParsevalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    parseval_sum: Estimate
    integral: Estimate
    residual: Estimate
    deviation: Estimate
    existence_tol: float
    expansion_exists: bool
    vanishes: Comparison

    @property
    def violated(self) -> bool:
        return self.expansion_exists and not self.vanishes.holds


def parseval_residual(f: ScalarField, expansion: Expansion) -> ParsevalResult:
    """Σ c_n² ∫φ_n²/f - ∫f over the whole family.

    The expansion is taken to exist when the full-family deviation is at
    most 1e-6 · ∫f; only then must the residual vanish.
    """
    total = sum(expansion.parseval_terms(), Estimate.exact(0.0))
    integral = Estimate.of(expansion.integral)
    residual = total - integral
    msd = mean_square_deviation(f, expansion, expansion.size)
    existence_tol = EXISTENCE_SCALE * abs(integral.value)
    exists = msd.value <= existence_tol
    result = ParsevalResult(
        parseval_sum=total,
        integral=integral,
        residual=residual,
        deviation=Estimate.of(msd),
        existence_tol=existence_tol,
        expansion_exists=exists,
        vanishes=compare(Estimate(value=abs(residual.value), err=residual.err), 0.0, expansion.settings.abs_tol),
    )
    if result.violated:
        logfire.warn("Parseval residual {residual} does not vanish", residual=residual.value)
    return result


def weighted_cauchy_schwarz(expansion: Expansion) -> Comparison:
    """(∫φ_1)² <= (∫f)(∫φ_1²/f) for the first family member."""
    return compare(expansion.numerators[0].square(), expansion.integral * expansion.denominators[0], expansion.settings.abs_tol)
