from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehrhart_lab.geometry import (
    DimensionDeficient,
    NonUnimodular,
    PointLocation,
    brute_force_facets,
    classify_point,
    convex_hull,
    det,
    transform,
)

from conftest import EX12


def test_triangle_hull(ex12):
    assert set(ex12.vertices) == {tuple(map(Fraction, v)) for v in EX12}
    assert len(ex12.facets) == 3
    assert ex12.is_lattice


def test_interior_point_dropped():
    P = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1), (Fraction(1, 2), Fraction(1, 2))])
    assert len(P.vertices) == 4
    assert (Fraction(1, 2), Fraction(1, 2)) not in P.vertices


def test_collinear_rejected():
    with pytest.raises(DimensionDeficient) as info:
        convex_hull([(0, 0), (1, 1), (2, 2)], 2)
    assert info.value.dim == 1


def test_facets_are_primitive(ex13):
    from math import gcd

    for h in ex13.facets:
        assert gcd(*h.normal, h.offset) == 1
        assert any(h.normal)


def test_translation(ex12):
    Q = transform(ex12, t=(1, 1))
    assert Q == convex_hull([(0, 0), (0, 3), (3, 0)])
    assert transform(ex12) == ex12


def test_dilation_makes_lattice(ex13):
    assert ex13.denominator_k == 2
    assert transform(ex13, s=2).denominator_k == 1


def test_non_unimodular_rejected(ex12):
    with pytest.raises(NonUnimodular):
        transform(ex12, U=[[2, 0], [0, 1]])


def test_classify(ex12):
    assert classify_point(ex12, (0, 0)) is PointLocation.INTERIOR
    assert classify_point(ex12, (2, -1)) is PointLocation.BOUNDARY
    assert classify_point(ex12, (3, 3)) is PointLocation.OUTSIDE
    interior = [
        (x, y) for x in range(-1, 3) for y in range(-1, 3)
        if classify_point(ex12, (x, y)) is PointLocation.INTERIOR
    ]
    assert interior == [(0, 0)]


def test_det_bareiss():
    assert det([[2, 1], [1, 1]]) == 1
    assert det([[1, 2, 3], [4, 5, 6], [7, 8, 10]]) == -3
    assert det([[1, 2], [2, 4]]) == 0


def _point_sets(dim, max_extra=5, box=3):
    coord = st.integers(-box, box)
    return st.lists(st.tuples(*[coord] * dim), min_size=dim + 1, max_size=dim + 1 + max_extra)


def _check_against_brute_force(pts, d):
    try:
        P = convex_hull(pts, d)
    except DimensionDeficient:
        return
    got = {(h.normal, h.offset) for h in P.facets}
    assert got == brute_force_facets(pts, d)
    for p in pts:
        assert classify_point(P, p) is not PointLocation.OUTSIDE
    # idempotence
    assert convex_hull(P.vertices, d) == P
    # vertices are extreme: dropping one changes the hull
    for v in P.vertices:
        rest = [w for w in P.vertices if w != v]
        try:
            assert convex_hull(rest, d) != P
        except DimensionDeficient:
            pass


@given(_point_sets(2, 8))
def test_hull_matches_brute_force_2d(pts):
    _check_against_brute_force(pts, 2)


@given(_point_sets(3, 5))
def test_hull_matches_brute_force_3d(pts):
    _check_against_brute_force(pts, 3)


@given(_point_sets(4, 3, box=2))
def test_hull_matches_brute_force_4d(pts):
    _check_against_brute_force(pts, 4)


@given(st.lists(st.tuples(st.fractions(-3, 3, max_denominator=4), st.fractions(-3, 3, max_denominator=4)),
                min_size=3, max_size=7))
def test_rational_hull_contains_inputs(pts):
    try:
        P = convex_hull(pts, 2)
    except DimensionDeficient:
        return
    assert {(h.normal, h.offset) for h in P.facets} == brute_force_facets(pts, 2)
    assert all(P.contains(p) for p in pts)
