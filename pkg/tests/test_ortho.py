import numpy as np
import pytest

from src.errors import DegenerateFamilyError, FamilyNotCertifiedError, WeightError
from src.expr.compiled import parse_field
from src.integrate.field import ConstantField
from src.integrate.integrate import inner_product
from src.ortho.family import OrthogonalFamily, gram_schmidt, orthogonality_residual, project
from src.region.region import box


def seeds(*sources, dim=1):
    return [parse_field(s, dim) for s in sources]


def test_legendre_polynomials(settings):
    region = box([-1.0], [1.0])
    family = gram_schmidt(seeds("1", "x1", "x1^2"), ConstantField(1.0, 1), region, settings)
    np.testing.assert_allclose(family.coefficients[2], [-1 / 3, 0.0, 1.0], atol=1e-9)
    np.testing.assert_allclose([n.value for n in family.norms], [2.0, 2 / 3, 8 / 45], rtol=1e-8)
    assert family.residual <= family.tolerance
    assert family.certified


def test_first_seed_is_kept(settings, unit):
    s = seeds("1 + x1", "x1^2", "exp(x1)")
    f = parse_field("2 + x1", 1, floor=2.0)
    family = gram_schmidt(s, f.reciprocal(), unit, settings)
    assert family.members[0] is s[0]
    assert family.size == 3
    for i in range(3):
        for j in range(i):
            ip = inner_product(family.members[i], family.members[j], family.weight, unit, settings)
            assert abs(ip.value) <= 1e-6 * np.sqrt(family.norms[i].value * family.norms[j].value)


def test_dependent_seeds_are_dropped(settings, unit):
    family = gram_schmidt(seeds("1", "x1", "2 * x1 + 3", "x1^2"), ConstantField(1.0, 1), unit, settings)
    assert family.dropped == (3,)
    assert family.size == 3


def test_zero_seeds_are_degenerate(settings, unit):
    with pytest.raises(DegenerateFamilyError):
        gram_schmidt(seeds("0", "0 * x1"), ConstantField(1.0, 1), unit, settings)
    with pytest.raises(DegenerateFamilyError):
        gram_schmidt([], ConstantField(1.0, 1), unit, settings)


def test_weight_needs_a_floor(settings, unit):
    with pytest.raises(WeightError):
        gram_schmidt(seeds("1"), parse_field("1 + x1", 1), unit, settings)


def test_given_families_are_certified_or_not(settings, unit):
    one = ConstantField(1.0, 1)
    plain = OrthogonalFamily.from_members(seeds("1", "x1"), one, unit, settings)
    assert not plain.certified
    assert plain.residual == pytest.approx(0.5 / np.sqrt(1 / 3), rel=1e-6)
    with pytest.raises(FamilyNotCertifiedError):
        OrthogonalFamily.from_members(seeds("1", "x1"), one, unit, settings, certify=True)
    shifted = OrthogonalFamily.from_members(seeds("1", "x1 - 0.5"), one, unit, settings, certify=True)
    assert shifted.certified


def test_independent_residual(settings, unit):
    f = parse_field("1 + x1", 1, floor=1.0)
    family = gram_schmidt(seeds("1", "x1", "x1^2", "x1^3"), f.reciprocal(), unit, settings)
    assert orthogonality_residual(family, settings.refined()) <= family.tolerance


def test_span_is_stable_under_projection(settings):
    region = box([0.0, 0.0], [1.0, 1.0])
    family = gram_schmidt(seeds("1", "x1", "x2", dim=2), ConstantField(1.0, 2), region, settings)
    u = parse_field("3 - 2 * x1 + 0.5 * x2", 2)
    p = project(u, family, settings)
    pts = np.random.default_rng(2).random((50, 2))
    np.testing.assert_allclose(p(pts), u(pts), atol=1e-8)


@pytest.mark.parametrize(
    "sources",
    [
        ("1", "x1", "x1^2", "x1^3", "x1^4", "x1^5"),
        ("1", "x1", "x1^2", "x1^3", "sin(3 * x1)", "x1^4"),
    ],
)
def test_ill_conditioned_seeds_are_certified(settings, unit, sources):
    w = parse_field("1 + x1 + x1^2", 1, floor=1.0).reciprocal()
    family = gram_schmidt(seeds(*sources), w, unit, settings)
    assert family.size == 6
    assert family.certified
    assert family.residual <= family.tolerance
    assert orthogonality_residual(family, settings.refined()) <= family.tolerance
