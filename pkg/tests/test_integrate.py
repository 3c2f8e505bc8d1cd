import math

import numpy as np
import pytest
from hypothesis import assume, given, settings as hsettings
from hypothesis import strategies as st

from src.errors import DimensionMismatchError, IntegrationError, ToleranceNotMetError, WeightError
from src.expr.compiled import parse_field
from src.integrate.estimate import Estimate, Verdict, compare
from src.integrate.field import ConstantField, FunctionField
from src.integrate.integrate import _boundary_cells, inner_product, integrate, measure, tree_sum
from src.integrate.settings import IntegratorSettings, Method
from src.region.box import Box
from src.region.cells import CellLevel, ProbeLayout, ProductRule, classify
from src.region.region import PredicateRegion, ball, box


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_unit_cube_volume(dim):
    est = integrate(ConstantField(1.0, dim), box([0.0] * dim, [1.0] * dim))
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert est.method is Method.refine


def test_disk_area():
    est = integrate(ConstantField(1.0, 2), ball([0.0, 0.0], 1.0))
    assert est.value == pytest.approx(math.pi, abs=1e-3)
    assert abs(est.value - math.pi) <= est.err + 1e-3


@pytest.mark.parametrize("k", range(10))
def test_monomials_are_exact(k, unit):
    est = integrate(parse_field(f"x1^{k}", 1), unit)
    assert est.value == pytest.approx(1 / (k + 1), abs=1e-9)


def test_smooth_field_meets_tolerance(unit, settings):
    est = integrate(parse_field("exp(x1)", 1), unit, settings)
    assert est.value == pytest.approx(math.e - 1, abs=1e-9)
    assert est.err <= settings.tolerance_for(est.value)


def test_discontinuity_on_a_ball():
    f = parse_field("x1", 2).restrict(ball([0.0, 0.0], 0.5))
    est = integrate(f, box([0.0, -1.0], [1.0, 1.0]), IntegratorSettings(rel_tol=1e-5, abs_tol=1e-8))
    # ∫ x over the right half-disk of radius 1/2 is 2r³/3.
    assert est.value == pytest.approx(2 * 0.5**3 / 3, abs=1e-3)


def test_annulus_measure(settings):
    ring = box([-1.0, -1.0], [1.0, 1.0]) - ball([0.0, 0.0], 0.25)
    est = measure(ring, settings)
    assert est.value == pytest.approx(4 - math.pi / 16, abs=1e-3)


def test_stochastic_method():
    s = IntegratorSettings(method=Method.stochastic, sample_count=20_000, seed=5, rel_tol=1e-2, abs_tol=1e-4)
    f = parse_field("x1 * x2", 2)
    region = box([0.0, 0.0], [1.0, 1.0])
    a = integrate(f, region, s)
    b = integrate(f, region, s)
    assert a == b
    assert a.seed == 5
    assert abs(a.value - 0.25) <= a.err
    c = integrate(f, region, s.model_copy(update={"seed": 6}))
    assert c.value != a.value


def test_refine_is_deterministic(fast):
    f = parse_field("sin(5 * x1) * x2 + 2", 2)
    region = ball([0.2, 0.0], 0.7)
    assert integrate(f, region, fast) == integrate(f, region, fast)


def test_strict_settings_raise():
    s = IntegratorSettings(method=Method.stochastic, sample_count=100, rel_tol=1e-12, abs_tol=1e-12, strict=True)
    with pytest.raises(ToleranceNotMetError):
        integrate(parse_field("x1", 1), box([0.0], [1.0]), s)


def test_high_dimensions_need_a_depth():
    with pytest.raises(IntegrationError):
        integrate(ConstantField(1.0, 4), box([0.0] * 4, [1.0] * 4))
    est = integrate(ConstantField(1.0, 4), box([0.0] * 4, [1.0] * 4), IntegratorSettings(max_depth=2))
    assert est.value == pytest.approx(1.0)


def test_dimension_mismatch(unit):
    with pytest.raises(DimensionMismatchError):
        integrate(parse_field("x1 + x2", 2), unit)


def test_inner_product_needs_a_positive_weight(unit):
    u = parse_field("x1", 1)
    with pytest.raises(WeightError):
        inner_product(u, u, parse_field("1 + x1", 1), unit)
    floored = parse_field("1 + x1", 1, floor=1.0)
    est = inner_product(ConstantField(1.0, 1), ConstantField(1.0, 1), floored.reciprocal(), unit)
    assert est.value == pytest.approx(math.log(2), abs=1e-9)


def test_reciprocal_checks_its_floor():
    f = parse_field("x1", 1, floor=0.5)
    r = f.reciprocal()
    assert r.at(2.0) == pytest.approx(0.5)
    with pytest.raises(WeightError):
        r(np.array([[1.0], [0.25]]))
    with pytest.raises(WeightError):
        parse_field("x1", 1, floor=0.0)


def test_field_algebra():
    x = parse_field("x1", 1)
    g = 2 * x * x - x / 2 + 1
    assert g.at(3.0) == pytest.approx(18 - 1.5 + 1)
    assert (-g).at(3.0) == pytest.approx(-17.5)
    assert (1 - x).at(0.25) == pytest.approx(0.75)
    restricted = x.restrict(box([0.0], [1.0]))
    np.testing.assert_allclose(restricted(np.array([[0.5], [1.5]])), [0.5, 0.0])
    square = FunctionField(lambda p: p[:, 0] ** 2, 1, "x^2")
    assert square.at(3.0) == 9.0
    bounded = x.with_bounds(-2.0, 1.0)
    assert bounded.sup_abs() == 2.0 and bounded.at(0.5) == 0.5
    assert x.sup_abs() is None


def test_tree_sum():
    rng = np.random.default_rng(1)
    values = rng.normal(size=1001)
    assert tree_sum(values) == pytest.approx(float(np.sum(values)), abs=1e-12)
    assert tree_sum(values) == tree_sum(values.copy())
    assert tree_sum(np.array([])) == 0.0


# ----------------------------
# Estimates and verdicts
# ----------------------------

def test_estimate_propagation():
    a = Estimate(value=2.0, err=0.1)
    b = Estimate(value=3.0, err=0.2)
    s = a + b
    assert (s.value, s.err) == (5.0, pytest.approx(0.3))
    assert (a * b).err == pytest.approx(3 * 0.1 + 2 * 0.2)
    assert (a / b).value == pytest.approx(2 / 3)
    assert a.square().err == pytest.approx(0.4)
    assert (1 - a).value == pytest.approx(-1.0)
    assert Estimate(value=4.0, err=0.0).sqrt().value == 2.0
    assert f"{a}" == "2 ± 0.1"


@pytest.mark.parametrize(
    "lhs, rhs, tol, verdict",
    [
        (1.0, 2.0, 1e-9, Verdict.holds),
        (1.0, 1.0, 1e-9, Verdict.tight),
        (1.0 + 1e-12, 1.0, 1e-9, Verdict.tight),
        (2.0, 1.0, 1e-9, Verdict.fails),
        (Estimate(value=1.1, err=0.2), 1.0, 1e-9, Verdict.tight),
    ],
)
def test_compare(lhs, rhs, tol, verdict):
    c = compare(lhs, rhs, tol)
    assert c.verdict is verdict
    assert c.holds == (verdict is not Verdict.fails)
    assert c.strict == (verdict is Verdict.holds)


def test_tight_verdict_text():
    assert str(compare(1.0, 1.0, 1e-9).verdict) == "equality within tolerance"


def test_plain_estimate_drops_evaluation_metadata(unit):
    est = integrate(parse_field("x1", 1), unit)
    plain = Estimate.of(est)
    assert type(plain) is Estimate
    assert (plain.value, plain.err) == (est.value, est.err)
    assert set(plain.model_dump()) == {"value", "err"}
    c = compare(est, 1.0, 1e-9)
    assert type(c.lhs) is Estimate


# ----------------------------
# Integral laws
# ----------------------------

LAW_SETTINGS = IntegratorSettings(rel_tol=1e-6, abs_tol=1e-9, max_depth=6)


@hsettings(max_examples=25, deadline=None, derandomize=True)
@given(st.floats(-10.0, 10.0), st.floats(-10.0, 10.0))
def test_integral_is_linear(a, b):
    region = ball([0.0, 0.0], 1.0)
    f = parse_field("exp(x1) * x2 + 1", 2)
    g = parse_field("sin(3 * x1) + x2^2", 2)
    lhs = integrate(a * f + b * g, region, LAW_SETTINGS)
    i_f = integrate(f, region, LAW_SETTINGS)
    i_g = integrate(g, region, LAW_SETTINGS)
    rhs = a * i_f.value + b * i_g.value
    slack = lhs.err + abs(a) * i_f.err + abs(b) * i_g.err + 10 * LAW_SETTINGS.abs_tol
    assert abs(lhs.value - rhs) <= slack


@hsettings(max_examples=25, deadline=None, derandomize=True)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=5, unique=True))
def test_integral_is_additive_over_sub_boxes(cuts):
    edges = [0.0, *sorted(cuts), 1.0]
    assume(min(b - a for a, b in zip(edges, edges[1:])) > 1e-3)
    f = parse_field("exp(x1) * sin(4 * x1) + 2", 1)
    whole = integrate(f, box([0.0], [1.0]))
    parts = [integrate(f, box([a], [b])) for a, b in zip(edges, edges[1:])]
    total = sum(p.value for p in parts)
    assert abs(total - whole.value) <= whole.err + sum(p.err for p in parts) + 1e-9


@pytest.mark.parametrize(
    "region",
    [box([0.0, 0.0], [1.0, 1.0]), ball([0.0, 0.0], 1.0), box([-1.0, -1.0], [1.0, 1.0]) - ball([0.0, 0.0], 0.3)],
)
def test_integral_is_monotone(region, fast):
    f = parse_field("sin(5 * x1 * x2)", 2)
    g = f + parse_field("x1^2 + 0.1", 2)
    lo = integrate(f, region, fast)
    hi = integrate(g, region, fast)
    assert compare(lo, hi, fast.abs_tol).holds
    assert lo.value < hi.value


def test_stochastic_error_covers_the_exact_value():
    f = parse_field("x1 * x2", 2)
    region = box([0.0, 0.0], [1.0, 1.0])
    covered = 0
    for seed in range(30):
        s = IntegratorSettings(method=Method.stochastic, sample_count=2_000, seed=seed, rel_tol=1e-2, abs_tol=1e-4)
        est = integrate(f, region, s)
        covered += abs(est.value - 0.25) <= est.err
    assert covered >= 28


def test_lattice_only_cells_are_charged_their_sup():
    region = PredicateRegion(lambda p: (p[:, 0] == 0.5) & (p[:, 1] == 0.0), Box.of([0.0, 0.0], [1.0, 1.0]))
    rule = ProductRule.gauss(2)
    layout = ProbeLayout.for_dim(2)
    level = CellLevel.top(region.bounds)
    sampled = classify(region, level, layout, level.rng(0), extra=rule.nodes)
    assert not sampled.inside.any() and sampled.lattice_hit.all()

    f = parse_field("x1 + 1", 2)
    value, err = _boundary_cells(f, region, level, sampled, np.array([0]), rule, layout)
    assert value.tolist() == [0.0]
    assert err.tolist() == [pytest.approx(1.5)]
    _, err = _boundary_cells(f.with_bounds(-3.0, 4.0), region, level, sampled, np.array([0]), rule, layout)
    assert err.tolist() == [pytest.approx(4.0)]

    est = integrate(f, region, IntegratorSettings(max_depth=3))
    assert est.value == 0.0
    assert est.err > 0.0
