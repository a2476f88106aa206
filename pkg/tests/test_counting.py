from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehrhart_lab.counting import count_dilation, ehrhart_vector, floor_sum, lattice_points
from ehrhart_lab.geometry import DimensionDeficient, convex_hull, transform

from conftest import EX12_COUNTS, naive_count, random_lattice_polytope


def test_lattice_points(ex12):
    assert len(lattice_points(ex12)) == 10
    square = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1)])
    assert lattice_points(square) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    third = Fraction(1, 3)
    assert lattice_points(convex_hull([(third, third), (2 * third, third), (third, 2 * third)])) == []


def test_known_counts(ex12, ex13):
    assert count_dilation(ex12, 2) == 28
    assert count_dilation(ex13, 1) == 10
    cube = convex_hull([(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    assert count_dilation(cube, 4) == 125
    assert ehrhart_vector(ex12, 4).counts == EX12_COUNTS
    assert ehrhart_vector(ex13, 4).counts == EX12_COUNTS
    assert ehrhart_vector(convex_hull([(0,), (1,)]), 3).counts == (1, 2, 3, 4)


def test_kernels_agree(ex13):
    for m in range(12):
        assert count_dilation(ex13, m, "slice") == count_dilation(ex13, m, "polygon")


def test_negative_dilation(ex12):
    with pytest.raises(ValueError):
        count_dilation(ex12, -1)


@given(st.integers(0, 40), st.integers(1, 30), st.integers(-50, 50), st.integers(-50, 50))
def test_floor_sum(n, m, a, b):
    assert floor_sum(n, m, a, b) == sum((a * i + b) // m for i in range(n))


@pytest.mark.parametrize("d", [2, 3])
def test_against_naive_enumeration(rng, d):
    for _ in range(15):
        P = random_lattice_polytope(rng, d)
        for m in range(5):
            assert count_dilation(P, m) == naive_count(P, m)


def test_rational_against_naive(rng):
    for _ in range(10):
        d = int(rng.integers(2, 4))
        P = transform(random_lattice_polytope(rng, d), s=Fraction(1, int(rng.integers(2, 5))))
        for m in range(6):
            assert count_dilation(P, m) == naive_count(P, m)


def test_large_coordinates_use_exact_path():
    P = convex_hull([(0, 0, 0), (10**12, 0, 0), (0, 1, 0), (0, 0, 1)])
    # bounded by a tetrahedron; only x varies freely on the base edge
    assert count_dilation(P, 1) == 10**12 + 3


unimodular = st.sampled_from([
    [[1, 0], [0, 1]], [[0, 1], [1, 0]], [[1, 1], [0, 1]], [[2, 1], [1, 1]], [[1, -3], [0, 1]], [[-1, 0], [2, 1]],
])


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=3, max_size=6),
       unimodular, st.tuples(st.integers(-5, 5), st.integers(-5, 5)), st.integers(1, 3))
def test_unimodular_invariance(pts, U, t, r):
    try:
        P = convex_hull(pts, 2)
    except DimensionDeficient:
        return
    Q = transform(P, U=U, t=t)
    R = transform(P, s=Fraction(1, r))
    for m in range(4):
        assert count_dilation(Q, m) == count_dilation(P, m)
        assert count_dilation(transform(P, s=r), m) == count_dilation(P, r * m)
        assert count_dilation(R, r * m) == count_dilation(P, m)


def test_nesting(rng):
    for _ in range(10):
        P = random_lattice_polytope(rng, 3)
        if not P.contains((0, 0, 0)):
            continue
        y = ehrhart_vector(P, 8).counts
        assert all(a <= b for a, b in zip(y, y[1:]))


def test_materialized_points_match_count(rng):
    for _ in range(5):
        P = random_lattice_polytope(rng, 3)
        pts = lattice_points(P)
        assert len(pts) == count_dilation(P, 1)
        assert all(P.contains(p) for p in pts)
        assert len(set(pts)) == len(pts)
