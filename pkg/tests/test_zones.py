from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiotest.model import parse_guard
from tiotest.zones import (
    INF_BOUND,
    Dbm,
    EmptyZoneError,
    enumerate_regions,
    fed_contains_point,
    fed_disjoint,
    fed_equal,
    fed_includes,
    fed_subtract,
    hull_relation,
    induced_guard,
    is_region,
    le,
    lt,
    region_of,
    time_successor_regions,
    widen_region,
)

XY = ("x", "y")


def z(text: str, clocks=XY) -> Dbm:
    return parse_guard(text).zone(clocks)


# strategies -----------------------------------------------------------------

OPS = ["<", "<=", "=", ">=", ">"]


@st.composite
def guards(draw, clocks=XY, max_const=3) -> str:
    n = draw(st.integers(0, 3))
    atoms = []
    for _ in range(n):
        c = draw(st.sampled_from(clocks))
        atoms.append(f"{c}{draw(st.sampled_from(OPS))}{draw(st.integers(0, max_const))}")
    return " && ".join(atoms) or "true"


quarter = st.integers(0, 20).map(lambda i: Fraction(i, 4))
points = st.fixed_dictionaries({"x": quarter, "y": quarter})


def holds(text: str, v) -> bool:
    """Direct evaluation of a guard on a valuation."""
    for atom in parse_guard(text).atoms:
        val, c = v[atom.clock], atom.constant
        ok = {"<": val < c, "<=": val <= c, "=": val == c, ">=": val >= c, ">": val > c}[atom.op]
        if not ok:
            return False
    return True


# bounds and canonical form ----------------------------------------------------


def test_bound_order_strict_is_tighter():
    assert lt(1) < le(1) < lt(2) < INF_BOUND


def test_canonical_tightening():
    d = Dbm.from_matrix(("x",), [le(0), le(0), le(1), le(0)])
    assert d == z("x<=1", ("x",))
    assert not d.is_empty()


def test_contradiction_is_empty():
    d = Dbm.from_matrix(("x",), [le(0), lt(0), le(0), le(0)])
    assert d.is_empty()


def test_reset_keeps_difference():
    d = Dbm.point(XY, {"x": 2, "y": 2}).reset(["x"])
    assert d == Dbm.point(XY, {"x": 0, "y": 2})
    assert d.bound("y", "x") == le(2)


def test_time_successor_of_origin():
    assert Dbm.zero(XY).up() == z("x>=0").constrain("x", "y", le(0)).constrain("y", "x", le(0))


def test_induced_guard_of_open_unit_region():
    r = z("y>0 && y<1")
    rel = hull_relation(z("x>0 && x<1 && y>0 && y<1").constrain("y", "x", lt(0)), 2)
    assert str(rel) == "0<x-y<1"
    assert induced_guard(r, rel, ("x",)) == z("x>0 && x<2", ("x",))


def test_induced_guard_point_region():
    rel = hull_relation(Dbm.zero(XY), 2)
    assert induced_guard(z("y=1"), rel, ("x",)) == z("x=1", ("x",))


def test_induced_guard_full_region_is_projection():
    rel = hull_relation(z("x>1").constrain("y", "x", le(-1)), 2)
    assert induced_guard(Dbm.universe(XY), rel, ("x",)) == rel.to_dbm().project(("x",))


def test_hull_examples():
    far = Dbm.point(XY, {"x": 0, "y": 3})
    assert str(hull_relation(far, 2)) == "x-y<-2"
    near = z("y=0 && x>0 && x<1")
    assert str(hull_relation(near, 1)) == "0<x-y<1"
    assert str(hull_relation(Dbm.point(XY, {"x": 1, "y": 1}), 0)) == "x-y=0"


def test_hull_of_empty_zone_raises():
    with pytest.raises(EmptyZoneError):
        hull_relation(Dbm.empty(XY), 2)


# regions ------------------------------------------------------------------------


def test_one_clock_region_count_by_brute_force():
    # distinct regions of sample points on a fine grid, against the enumeration
    pts = {region_of({"x": Fraction(i, 8)}, ("x",), 1) for i in range(0, 40)}
    assert len(pts) == 4
    assert set(enumerate_regions(("x",), 1)) == pts


def test_region_of_and_time_line():
    assert region_of({"x": Fraction(1, 2)}, ("x",), 1) == z("x>0 && x<1", ("x",))
    line = time_successor_regions(Dbm.zero(("x",)), 1)
    assert [str(r) for r in line] == ["x=0", "x>0 && x<1", "x=1", "x>1"]


def test_widen_region():
    y = ("y",)
    assert widen_region(z("y=3", y), 2) == z("y>2", y)
    assert widen_region(z("y=1", y), 2) == z("y=1", y)
    fine = z("y>2 && y<3", y)
    wide = widen_region(fine, 2)
    # minimality against every M=2 region
    containing = [r for r in enumerate_regions(y, 2) if r.includes(fine)]
    assert containing == [wide]


def test_two_clock_regions_partition():
    regions = enumerate_regions(XY, 1)
    for a, b in itertools.combinations(regions, 2):
        assert a.intersect(b).is_empty()
    assert fed_includes(list(regions), [Dbm.universe(XY)])
    assert all(is_region(r, 1) for r in regions)


# properties against pointwise evaluation -----------------------------------------


@given(guards(), guards(), points)
def test_intersection_matches_points(g1, g2, v):
    assert z(g1).intersect(z(g2)).contains_point(v) == (holds(g1, v) and holds(g2, v))


@given(guards(), guards(), points)
def test_subtraction_matches_points(g1, g2, v):
    diff = fed_subtract([z(g1)], [z(g2)])
    assert fed_contains_point(diff, v) == (holds(g1, v) and not holds(g2, v))


@given(guards(), guards())
def test_disjoint_pieces_preserve_union(g1, g2):
    parts = fed_disjoint([z(g1), z(g2)])
    for a, b in itertools.combinations(parts, 2):
        assert a.intersect(b).is_empty()
    assert fed_equal(parts, [w for w in (z(g1), z(g2)) if not w.is_empty()])


@given(guards(), points, quarter)
def test_up_contains_delayed_points(g, v, d):
    if holds(g, v):
        assert z(g).up().contains_point({c: x + d for c, x in v.items()})


@given(guards(), points)
def test_reset_contains_image(g, v):
    if holds(g, v):
        assert z(g).reset(["x"]).contains_point({"x": 0, "y": v["y"]})


@given(guards(), guards())
def test_inclusion_agrees_with_subtraction(g1, g2):
    assert z(g1).includes(z(g2)) == (not fed_subtract([z(g2)], [z(g1)]))


@given(st.permutations(["x<=2", "y>1", "x>0", "y<3"]))
def test_canonical_form_is_order_independent(atoms):
    assert z(" && ".join(atoms)) == z("x<=2 && y>1 && x>0 && y<3")


@settings(max_examples=50)
@given(guards())
def test_hull_contains_zone_and_is_bounded(g):
    zone = z(g)
    if zone.is_empty():
        return
    rel = hull_relation(zone, 2)
    assert rel.to_dbm().includes(zone)
    for b in rel.diff:
        assert b == INF_BOUND or -2 <= b[0] <= 2


@given(points)
def test_region_of_contains_its_point(v):
    r = region_of(v, XY, 2)
    assert r.contains_point(v)
    assert is_region(r, 2)
