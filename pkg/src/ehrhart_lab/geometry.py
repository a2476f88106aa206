"""Exact rational polytopes: convex hulls, facets, affine maps.

Everything here works over Python integers and :class:`fractions.Fraction`.
Hulls are computed on integer points (inputs are rescaled by the lcm of
their denominators) with an incremental beneath-beyond sweep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import gcd, lcm
from typing import Iterable, Sequence

Point = tuple  # tuple of Fraction (or int) coordinates


class DimensionDeficient(ValueError):
    """The affine hull of the input is not full-dimensional."""

    def __init__(self, dim: int):
        super().__init__(f"affine hull has dimension {dim}")
        self.dim = dim


class NonUnimodular(ValueError):
    pass


class PointLocation(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def as_point(coords: Iterable) -> tuple[Fraction, ...]:
    """Coerce ints, Fractions or ``"p/q"`` strings into a tuple of Fractions."""
    return tuple(Fraction(c) for c in coords)


@dataclass(frozen=True)
class Halfspace:
    """The closed halfspace ``{x : normal . x >= offset}``."""

    normal: tuple[int, ...]
    offset: int

    def slack(self, x: Sequence) -> Fraction:
        return sum(a * c for a, c in zip(self.normal, x)) - self.offset


@dataclass(frozen=True)
class RationalPolytope:
    """A full-dimensional polytope in both V- and H-representation.

    Build these with :func:`convex_hull`; the constructor does not check
    that ``vertices`` and ``facets`` agree.
    """

    ambient_dim: int
    vertices: tuple[tuple[Fraction, ...], ...]
    facets: tuple[Halfspace, ...]

    @cached_property
    def denominator_k(self) -> int:
        """Smallest k >= 1 with kP a lattice polytope."""
        return lcm(1, *(c.denominator for v in self.vertices for c in v))

    @property
    def is_lattice(self) -> bool:
        return self.denominator_k == 1

    def contains(self, x: Sequence) -> bool:
        return all(h.slack(x) >= 0 for h in self.facets)

    def __len__(self) -> int:
        return len(self.vertices)


# ---------------------------------------------------------------------------
# integer linear algebra


def det(matrix: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix (Bareiss elimination)."""
    m = [list(row) for row in matrix]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
        prev = pivot
    return sign * m[n - 1][n - 1]


def rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix, fraction-free."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, len(m)):
            f = m[i][c]
            if f:
                m[i] = [x * p - y * f for x, y in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def _sub(p, q):
    return [a - b for a, b in zip(p, q)]


def _dot(a, x):
    return sum(u * v for u, v in zip(a, x))


def affine_rank(points: Sequence[Sequence[int]]) -> int:
    if not points:
        return -1
    base = points[0]
    return rank([_sub(p, base) for p in points[1:]])


def _independent_subset(points, size):
    """Greedily pick ``size`` affinely independent points, or None."""
    chosen = [points[0]]
    diffs: list[list[int]] = []
    for p in points[1:]:
        cand = diffs + [_sub(p, chosen[0])]
        if rank(cand) == len(cand):
            chosen.append(p)
            diffs = cand
            if len(chosen) == size:
                return chosen
    return chosen if len(chosen) == size else None


def _normalize(normal, offset):
    g = gcd(*normal, offset)
    return tuple(a // g for a in normal), offset // g


def hyperplane_through(points: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], int]:
    """Integer ``(normal, offset)`` of the hyperplane through d affinely
    independent integer points in Z^d (orientation arbitrary)."""
    d = len(points[0])
    rows = [_sub(p, points[0]) for p in points[1:]]
    normal = []
    for j in range(d):
        minor = [r[:j] + r[j + 1:] for r in rows]
        normal.append((-1) ** j * det(minor))
    return _normalize(normal, _dot(normal, points[0]))


# ---------------------------------------------------------------------------
# hull


def _hull_integer(pts: list[tuple[int, ...]], d: int):
    if d == 1:
        lo, hi = pts[0], pts[-1]
        if lo == hi:
            raise DimensionDeficient(0)
        return [lo, hi], [((1,), lo[0]), ((-1,), -hi[0])]

    simplex = _independent_subset(pts, d + 1)
    if simplex is None:
        raise DimensionDeficient(affine_rank(pts))
    csum = [sum(c) for c in zip(*simplex)]

    def oriented(normal, offset):
        # centroid of the initial simplex is strictly inside every later hull
        if _dot(normal, csum) < (d + 1) * offset:
            return tuple(-a for a in normal), -offset
        return normal, offset

    facets = set()
    for i in range(d + 1):
        others = simplex[:i] + simplex[i + 1:]
        facets.add(oriented(*hyperplane_through(others)))

    hull_pts = list(simplex)
    in_hull = set(simplex)
    for p in pts:
        if p in in_hull:
            continue
        visible = [f for f in facets if _dot(f[0], p) < f[1]]
        if not visible:
            continue
        invisible = [f for f in facets if _dot(f[0], p) >= f[1]]
        tight = {f: frozenset(q for q in hull_pts if _dot(f[0], q) == f[1]) for f in facets}
        new = set(invisible)
        for f1 in visible:
            for f2 in invisible:
                common = sorted(tight[f1] & tight[f2])
                if len(common) < d - 1:
                    continue
                ridge = _independent_subset(common, d - 1)
                if ridge is None:
                    continue
                new.add(oriented(*hyperplane_through(ridge + [p])))
        facets = new
        hull_pts.append(p)
        in_hull.add(p)

    facets = sorted(facets)
    vertices = []
    for q in sorted(hull_pts):
        normals = [f[0] for f in facets if _dot(f[0], q) == f[1]]
        if len(normals) >= d and rank(normals) == d:
            vertices.append(q)
    return vertices, facets


def convex_hull(points: Iterable[Sequence], ambient_dim: int | None = None) -> RationalPolytope:
    """Convex hull of finitely many rational points.

    Raises :class:`DimensionDeficient` (carrying the actual affine dimension)
    when the points do not affinely span the ambient space.
    """
    pts = [as_point(p) for p in points]
    if not pts:
        raise ValueError("convex_hull of an empty point set")
    d = len(pts[0]) if ambient_dim is None else ambient_dim
    if any(len(p) != d for p in pts):
        raise ValueError(f"all points must have dimension {d}")
    if d == 0:
        raise DimensionDeficient(0)

    scale = lcm(1, *(c.denominator for p in pts for c in p))
    ipts = sorted({tuple(int(c * scale) for c in p) for p in pts})
    ivertices, ifacets = _hull_integer(ipts, d)

    vertices = tuple(tuple(Fraction(c, scale) for c in v) for v in ivertices)
    facets = []
    for normal, offset in ifacets:
        n, b = _normalize([a * scale for a in normal], offset)
        facets.append(Halfspace(n, b))
    return RationalPolytope(d, vertices, tuple(sorted(facets, key=lambda h: (h.normal, h.offset))))


def classify_point(P: RationalPolytope, x: Sequence) -> PointLocation:
    x = as_point(x)
    if len(x) != P.ambient_dim:
        raise ValueError("point dimension does not match polytope")
    slacks = [h.slack(x) for h in P.facets]
    if any(s < 0 for s in slacks):
        return PointLocation.OUTSIDE
    if any(s == 0 for s in slacks):
        return PointLocation.BOUNDARY
    return PointLocation.INTERIOR


def transform(P: RationalPolytope, U=None, t=None, s=1) -> RationalPolytope:
    """Image of P under ``x -> s * (U x + t)``.

    ``U`` must be unimodular when given; ``s`` must be positive.
    """
    d = P.ambient_dim
    s = Fraction(s)
    if s <= 0:
        raise ValueError("scale factor must be positive")
    if U is None:
        U = [[int(i == j) for j in range(d)] for i in range(d)]
    else:
        U = [[int(a) for a in row] for row in U]
        if abs(det(U)) != 1:
            raise NonUnimodular(f"det(U) = {det(U)}")
    t = as_point(t) if t is not None else (Fraction(0),) * d
    images = [
        tuple(s * (sum(U[i][j] * v[j] for j in range(d)) + t[i]) for i in range(d))
        for v in P.vertices
    ]
    return convex_hull(images, d)


def brute_force_facets(points: Sequence[Sequence], d: int) -> set[tuple[tuple[int, ...], int]]:
    """Facet hyperplanes by exhaustive search over d-subsets.

    Independent cross-check for :func:`convex_hull`; only for tiny inputs.
    Returns normalized ``(normal, offset)`` pairs in the input's coordinates.
    """
    pts = [as_point(p) for p in points]
    scale = lcm(1, *(c.denominator for p in pts for c in p))
    ipts = sorted({tuple(int(c * scale) for c in p) for p in pts})
    found = set()
    for subset in combinations(ipts, d):
        if affine_rank(list(subset)) != d - 1:
            continue
        normal, offset = hyperplane_through(list(subset))
        vals = [_dot(normal, q) - offset for q in ipts]
        if all(v >= 0 for v in vals):
            pass
        elif all(v <= 0 for v in vals):
            normal, offset = tuple(-a for a in normal), -offset
        else:
            continue
        found.add(_normalize([a * scale for a in normal], offset))
    return found
