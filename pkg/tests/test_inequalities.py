import math

import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from src.errors import RegionError, TruncationError
from src.expr.compiled import parse_field
from src.inequalities.cauchy_schwarz import cauchy_schwarz_gap
from src.inequalities.criterion import corollary_check, product_criterion_check
from src.integrate.estimate import Verdict
from src.integrate.field import ConstantField
from src.integrate.settings import IntegratorSettings
from src.ortho.family import gram_schmidt
from src.region.region import ball, box

UNIT = box([0.0], [1.0])


def test_equal_functions_are_tight():
    x = parse_field("x1", 1)
    res = cauchy_schwarz_gap(x, x, UNIT)
    assert res.verdict is Verdict.tight
    assert res.violations() == []


def test_constant_and_linear():
    res = cauchy_schwarz_gap(parse_field("1", 1), parse_field("x1", 1), UNIT)
    assert res.gap.value == pytest.approx(1 / 12, abs=1e-9)
    assert res.verdict is Verdict.holds


def test_disjoint_supports():
    g = parse_field("1 + x1", 1).restrict(box([0.0], [0.5]))
    h = parse_field("2", 1).restrict(box([0.5], [1.0]))
    res = cauchy_schwarz_gap(g, h, UNIT)
    assert res.int_gh.value == pytest.approx(0.0, abs=1e-9)
    assert res.gap.value == pytest.approx(res.int_g2.value * res.int_h2.value, abs=1e-9)
    assert res.check.holds


def test_proportional_functions():
    g = parse_field("sin(3 * x1) + x1^2", 1)
    res = cauchy_schwarz_gap(g, -2.5 * g, UNIT)
    assert res.check.holds
    assert abs(res.gap.value) <= res.check.slack


@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_scaling(lam):
    g, h = parse_field("cos(2 * x1)", 1), parse_field("x1 - 0.3", 1)
    base = cauchy_schwarz_gap(g, h, UNIT)
    scaled = cauchy_schwarz_gap(lam * g, h, UNIT)
    assert scaled.gap.value == pytest.approx(lam**2 * base.gap.value, abs=scaled.gap.err + lam**2 * base.gap.err + 1e-9)


def test_support_split():
    g = parse_field("max(x1 - 0.25, 0)", 1)
    h = parse_field("x1", 1)
    res = cauchy_schwarz_gap(g, h, UNIT, split=True)
    assert res.split is not None
    assert res.split.measure_d.value == pytest.approx(0.75, abs=1e-6)
    assert res.split.gh_unchanged.holds
    assert res.split.g2_dominates.holds
    assert res.split.h2_dominates.holds
    assert res.split.h2_dominates.verdict is Verdict.holds
    assert res.split.on_support.holds
    assert res.violations() == []


def _term(coeff: float, shift: float, kind: int) -> str:
    return [f"{coeff!r} * (x1 - {shift!r})", f"{coeff!r} * sin(3 * x1 + {shift!r})", f"max({coeff!r} * (x2 - {shift!r}), 0)"][kind]


instance = st.tuples(
    st.floats(-2.0, 2.0), st.floats(-1.0, 1.0), st.integers(0, 2),
    st.floats(-2.0, 2.0), st.floats(-1.0, 1.0), st.integers(0, 2),
    st.booleans(),
)


@hsettings(max_examples=100, deadline=None, derandomize=True)
@given(instance)
def test_gap_is_never_negative(case):
    a, s, k, b, t, m, round_region = case
    region = ball([0.1, -0.1], 0.9) if round_region else box([-1.0, 0.0], [1.0, 0.5])
    g = parse_field(_term(a, s, k), 2)
    h = parse_field(_term(b, t, m), 2)
    res = cauchy_schwarz_gap(g, h, region, IntegratorSettings(rel_tol=1e-5, abs_tol=1e-8, max_depth=5))
    assert res.check.holds


# ----------------------------
# Product criterion
# ----------------------------

def _families(f_src, g_src, seeds, floor_f=1.0, floor_g=1.0, settings=None):
    f = parse_field(f_src, 1, floor=floor_f)
    g = parse_field(g_src, 1, floor=floor_g)
    phi = gram_schmidt([parse_field(s, 1) for s in seeds], f.reciprocal(), UNIT, settings)
    psi = gram_schmidt([parse_field(s, 1) for s in seeds], g.reciprocal(), UNIT, settings)
    return f, g, phi, psi


def test_constant_fields_are_tight_everywhere():
    f, g, phi, psi = _families("1", "1", ["1"])
    report = product_criterion_check(f, g, phi, psi, 1)
    cell = report.grid[0]
    assert cell.crit_a.verdict is Verdict.tight
    assert cell.crit_b.verdict is Verdict.tight
    assert report.conclusion.verdict is Verdict.tight
    assert report.violations == []


def test_comonotone_conclusion():
    f, g, phi, psi = _families("1 + x1", "1 + x1", ["1", "x1"])
    report = product_criterion_check(f, g, phi, psi, 2)
    assert report.int_fg.value == pytest.approx(7 / 3, abs=1e-9)
    assert report.int_f_times_int_g.value == pytest.approx(9 / 4, abs=1e-9)
    assert report.conclusion.margin > 0.08
    assert report.conclusion.verdict is Verdict.holds
    assert report.measure.value == pytest.approx(1.0)
    assert report.f_complete and report.g_complete
    assert len(report.grid) == 4
    assert report.violations == []


def test_oppositely_monotone_fails_a_criterion():
    f, g, phi, psi = _families("1 + x1", "2 - x1", ["1", "x1"])
    report = product_criterion_check(f, g, phi, psi, 2)
    assert report.int_fg.value == pytest.approx(13 / 6, abs=1e-9)
    assert report.conclusion.verdict is Verdict.fails
    assert not report.all_criteria_hold
    assert report.contrapositive_ok
    failing = [(c.n, c.m) for c in report.grid if not c.both]
    assert (2, 2) in failing
    assert report.csv_rows()[0] == ["n\\m", "1", "2"]
    assert report.violations == []


def test_chain_diagnostics_at_one_member():
    f, g, phi, psi = _families("1 + x1", "1 + x1", ["1"])
    report = product_criterion_check(f, g, phi, psi, 1, diagnostics=True)
    assert len(report.chain) == 7
    asserted = [link for link in report.chain if link.asserted]
    assert all(link.check.holds for link in asserted)
    # ∫1/(1+x)² = 1/2 exceeds (ln 2)², so criterion A fails here.
    assert not report.grid[0].crit_a_holds
    assert report.violations == []


def test_criterion_checks_its_inputs():
    f, g, phi, psi = _families("1 + x1", "1 + x1", ["1"])
    with pytest.raises(TruncationError):
        product_criterion_check(f, g, phi, psi, 2)
    other = gram_schmidt([parse_field("1", 1)], g.reciprocal(), box([0.0], [2.0]))
    with pytest.raises(RegionError):
        product_criterion_check(f, g, phi, other, 1)


def test_sub_condition_anchor():
    f, g, phi, psi = _families("1 + x1", "1", ["1"])
    report = corollary_check(f, g, phi, psi, 1)
    sub = report.sub_conditions[0]
    assert sub.family == "phi"
    assert sub.check.lhs.value == pytest.approx(0.5, abs=1e-9)
    assert sub.check.rhs.value == pytest.approx(math.log(2) ** 2, abs=1e-9)
    assert sub.check.verdict is Verdict.fails
    assert report.sub_conditions[1].check.verdict is Verdict.tight
    assert not report.grid[0].certifies_crit_a


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_corollary_constant_fields(c):
    f = parse_field(repr(c), 1, floor=c)
    family = gram_schmidt([ConstantField(1.0, 1)], f.reciprocal(), UNIT)
    report = corollary_check(f, f, family, family, 1)
    assert report.grid[0].bound.verdict is Verdict.tight
    assert all(s.check.verdict is Verdict.tight for s in report.sub_conditions)
    assert report.sub_conditions[0].check.lhs.value == pytest.approx(1 / c**2)


@hsettings(max_examples=50, deadline=None, derandomize=True)
@given(st.floats(0.5, 3.0), st.floats(-0.45, 2.0), st.floats(0.5, 3.0), st.floats(-0.45, 2.0))
def test_corollary_bound_always_holds(a, b, c, d):
    floor_f, floor_g = a + min(b, 0.0), c + min(d, 0.0)
    f, g, phi, psi = _families(f"{a!r} + {b!r} * x1", f"{c!r} + {d!r} * x1^2", ["1", "x1", "x1^2"], floor_f, floor_g)
    report = corollary_check(f, g, phi, psi, 3)
    assert report.violations == []
    assert all(cell.bound.holds for cell in report.grid)
