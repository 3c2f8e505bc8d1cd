import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import DimensionMismatchError, RegionError
from src.expr.compiled import parse_field, parse_predicate
from src.region.box import Box
from src.region.partition import Sign, sign_partition
from src.region.region import PredicateRegion, ball, box
from src.region.spec import RegionSpec, construct_region


def test_box_is_closed():
    b = box([0.0, 0.0], [1.0, 2.0])
    np.testing.assert_array_equal(
        b.contains([[0.0, 0.0], [1.0, 2.0], [0.5, 2.0001], [-1e-12, 1.0]]),
        [True, True, False, False],
    )
    assert b.volume_bound() == 2.0


def test_ball_membership():
    d = ball([0.0, 0.0], 1.0)
    assert [1.0, 0.0] in d
    assert [0.8, 0.8] not in d
    assert d.bounds == Box.of([-1.0, -1.0], [1.0, 1.0])


def test_set_algebra():
    a = box([0.0], [2.0])
    b = box([1.0], [3.0])
    pts = [[0.5], [1.5], [2.5], [3.5]]
    np.testing.assert_array_equal((a | b).contains(pts), [True, True, True, False])
    np.testing.assert_array_equal((a & b).contains(pts), [False, True, False, False])
    np.testing.assert_array_equal((a - b).contains(pts), [True, False, False, False])
    assert (a | b).bounds == Box.of([0.0], [3.0])


def test_annulus():
    ring = ball([0.0, 0.0], 1.0) - ball([0.0, 0.0], 0.5)
    np.testing.assert_array_equal(ring.contains([[0.0, 0.0], [0.75, 0.0], [0.0, -0.99], [1.0, 1.0]]), [False, True, True, False])


def test_mismatched_dimensions():
    with pytest.raises(DimensionMismatchError):
        box([0.0], [1.0]) | box([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(DimensionMismatchError):
        PredicateRegion(parse_predicate("x1 < 0.5", 1), Box.cube(2))


@pytest.mark.parametrize("lo, hi", [([1.0], [1.0]), ([0.0], [float("inf")]), ([2.0, 0.0], [1.0, 1.0])])
def test_invalid_boxes(lo, hi):
    with pytest.raises(RegionError):
        Box.of(lo, hi)


def test_predicate_region_outside_bounds_is_empty():
    half_disk = PredicateRegion(parse_predicate("x1^2 + x2^2 <= 1 and x2 >= 0", 2), Box.of([-1, 0], [1, 1]))
    np.testing.assert_array_equal(half_disk.contains([[0.0, 0.5], [0.0, -0.5], [0.9, 0.9]]), [True, False, False])


def test_construct_region_from_spec():
    spec = RegionSpec.model_validate(
        {
            "difference": [
                {"box": {"lo": ["-pi", "-pi"], "hi": ["pi", "pi"]}},
                {"ball": {"center": [0, 0], "radius": "1/2"}},
            ]
        }
    )
    region = construct_region(spec, 2)
    assert region.bounds.lo == pytest.approx((-np.pi, -np.pi))
    np.testing.assert_array_equal(region.contains([[0.0, 0.0], [3.0, 3.0], [0.4, 0.4]]), [False, True, True])


def test_region_spec_takes_one_kind():
    with pytest.raises(ValidationError):
        RegionSpec.model_validate({"box": {"lo": [0], "hi": [1]}, "ball": {"center": [0], "radius": 1}})
    with pytest.raises(ValidationError):
        RegionSpec.model_validate({})


def test_construct_region_checks_dimension_and_radius():
    with pytest.raises(DimensionMismatchError):
        construct_region(RegionSpec.model_validate({"box": {"lo": [0], "hi": [1]}}), 2)
    with pytest.raises(RegionError):
        construct_region(RegionSpec.model_validate({"ball": {"center": [0], "radius": 0}}), 1)


# ----------------------------
# Sign partitions
# ----------------------------

def test_partition_of_a_linear_field():
    p = sign_partition(parse_field("x1 - 0.5", 1), box([0.0], [1.0]), max_depth=4)
    assert [c.sign for c in p.cells] == [Sign.negative, Sign.positive] * 3
    assert [c.region.bounds for c in p.cells[:2]] == [Box.of([0.0], [0.25]), Box.of([0.75], [1.0])]
    # The crossing sits on a cell corner, so the band around it stays unresolved.
    assert [u.bounds for u in p.unresolved] == [Box.of([0.4375], [0.5]), Box.of([0.5], [0.5625])]
    assert p.unresolved_volume == pytest.approx(0.125)
    assert p.cells[0].region.label == "cell 1 (-)"


def test_partition_cells_are_half_open():
    p = sign_partition(parse_field("x1 - 0.5", 1), box([0.0], [1.0]), max_depth=4)
    pts = np.array([[0.0], [0.25], [0.5], [1.0]])
    np.testing.assert_array_equal(p.claims(pts), [1, 1, 1, 1])
    assert not p.cells[0].region.contains([[0.25]])[0]
    assert p.cells[1].region.contains([[1.0]])[0]


def test_quadrants():
    p = sign_partition(parse_field("x1 * x2", 2), box([-1.0, -1.0], [1.0, 1.0]), max_depth=4)
    groups = p.grouped()
    assert len(groups[Sign.positive]) == len(groups[Sign.negative]) > 0
    assert p.unresolved
    assert sum(c.volume_bound for c in p.cells) + p.unresolved_volume == pytest.approx(4.0)


def test_zero_cells():
    p = sign_partition(parse_field("max(x1 - 0.5, 0)", 1), box([0.0], [1.0]), max_depth=3)
    assert [c.sign for c in p.cells] == [Sign.zero, Sign.positive, Sign.positive]
    assert list(p.grouped()) == [Sign.positive, Sign.zero]


@pytest.mark.parametrize(
    "source, region",
    [
        ("x1 - 0.3", box([0.0], [1.0])),
        ("x1 + 2 * x2 - 0.3", box([-1.0, -1.0], [1.0, 1.0])),
    ],
)
@pytest.mark.parametrize("seed", range(8))
def test_signed_cells_hold_their_sign_everywhere(source, region, seed):
    f = parse_field(source, region.dim)
    p = sign_partition(f, region, max_depth=6, seed=seed)
    rng = np.random.default_rng(100 + seed)
    for cell in p.cells:
        b = cell.region.bounds
        pts = b.low + rng.random((200, b.dim)) * b.width
        pts = pts[cell.region.contains(pts)]
        values = f(pts)
        if cell.sign is Sign.zero:
            assert np.all(np.abs(values) <= p.zeta)
        else:
            assert np.all(int(cell.sign) * values >= -p.zeta)


@pytest.mark.parametrize("source", ["x1 - 0.3", "sin(5 * x1) * x2 + 0.2"])
def test_unresolved_volume_shrinks_with_depth(source):
    f = parse_field(source, 2)
    region = ball([0.0, 0.0], 1.0)
    volumes = [sign_partition(f, region, max_depth=d, seed=1).unresolved_volume for d in range(2, 7)]
    assert all(b <= a + 1e-12 for a, b in zip(volumes, volumes[1:]))
    assert volumes[-1] < volumes[0]


def test_every_region_point_is_claimed_once():
    region = box([-1.0, -1.0], [1.0, 1.0]) - ball([0.1, -0.2], 0.4)
    p = sign_partition(parse_field("x1 + 2 * x2 - 0.3", 2), region, max_depth=5, seed=3)
    pts = np.random.default_rng(0).uniform(-1.0, 1.0, size=(5000, 2))
    claims = p.claims(pts)
    inside = region.contains(pts)
    np.testing.assert_array_equal(claims[inside], 1)
    np.testing.assert_array_equal(claims[~inside], 0)


def test_partition_is_deterministic():
    f = parse_field("sin(3 * x1) * x2", 2)
    region = ball([0.0, 0.0], 1.0)
    a = sign_partition(f, region, max_depth=4, seed=7)
    b = sign_partition(f, region, max_depth=4, seed=7)
    assert [(c.sign, c.region.bounds) for c in a.cells] == [(c.sign, c.region.bounds) for c in b.cells]
    assert [u.bounds for u in a.unresolved] == [u.bounds for u in b.unresolved]


def test_unresolved_cells_carry_the_sup():
    p = sign_partition(parse_field("x1 - 1/3", 1), box([0.0], [1.0]), max_depth=2)
    assert p.unresolved_volume > 0
    assert 0 < p.unresolved_sup <= 2 / 3
    assert p.sup_bound() == p.unresolved_sup
    bounded = sign_partition(parse_field("x1 - 1/3", 1, bounds=(-1 / 3, 2 / 3)), box([0.0], [1.0]), max_depth=2)
    assert bounded.sup_bound() == pytest.approx(2 / 3)


def test_partition_rejects_bad_arguments():
    with pytest.raises(RegionError):
        sign_partition(parse_field("x1", 1), box([0.0], [1.0]), max_depth=0)
    with pytest.raises(RegionError):
        sign_partition(parse_field("x1", 1), box([0.0], [1.0]), max_depth=3, zeta=0.0)
    with pytest.raises(DimensionMismatchError):
        sign_partition(parse_field("x1", 1), box([0.0, 0.0], [1.0, 1.0]), max_depth=3)
