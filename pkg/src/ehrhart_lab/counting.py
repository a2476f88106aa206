"""Lattice-point counting in dilations of rational polytopes.

Counts are obtained by slicing: the last coordinate is fixed first, then
the next one, and so on, with the admissible range of each coordinate read
off the facets of the projection of P onto the trailing coordinates.  The
innermost coordinate contributes ``floor(hi) - ceil(lo) + 1``.  All slices
of one level are processed together as integer numpy arrays.

Polygons take a separate path: each column count is a floor of an affine
function, so a whole edge is summed at once with :func:`floor_sum`.  This
keeps the cost independent of the dilation factor, which matters for
polygons with a large denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor

import numpy as np

from .geometry import RationalPolytope, convex_hull

_CHUNK = 1 << 17
_INT64_SAFE = 1 << 60


@dataclass(frozen=True)
class EhrhartVector:
    """Counts ``y_m = |mP ∩ Z^d|`` for ``m = 0..T``."""

    counts: tuple[int, ...]
    source_dim: int
    source_k: int = 1

    def __post_init__(self):
        if not self.counts or self.counts[0] != 1:
            raise ValueError("an Ehrhart vector starts with y_0 = 1")

    @property
    def T(self) -> int:
        return len(self.counts) - 1

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, m):
        return self.counts[m]


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """``sum(floor((a*i + b) / m) for i in range(n))`` in O(log) steps; m > 0."""
    if n <= 0:
        return 0
    ans = 0
    if a < 0 or a >= m:
        q, a = divmod(a, m)
        ans += q * (n * (n - 1) // 2)
    if b < 0 or b >= m:
        q, b = divmod(b, m)
        ans += q * n
    while True:
        if a >= m:
            ans += (n * (n - 1) // 2) * (a // m)
            a %= m
        if b >= m:
            ans += n * (b // m)
            b %= m
        y_max = a * n + b
        if y_max < m:
            return ans
        n, b = divmod(y_max, m)
        m, a = a, m


# ---------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class _Segment:
    left: Fraction
    right: Fraction
    upper: tuple[int, int, int]  # (a1, a2, b) with a2 < 0
    lower: tuple[int, int, int]  # (a1, a2, b) with a2 > 0


@lru_cache(maxsize=4096)
def _polygon_segments(P: RationalPolytope) -> tuple[_Segment, ...]:
    xs = sorted({v[0] for v in P.vertices})
    uppers = [(h.normal[0], h.normal[1], h.offset) for h in P.facets if h.normal[1] < 0]
    lowers = [(h.normal[0], h.normal[1], h.offset) for h in P.facets if h.normal[1] > 0]
    segs = []
    for left, right in zip(xs, xs[1:]):
        mid = (left + right) / 2
        up = min(uppers, key=lambda f: Fraction(f[0] * mid - f[2], -f[1]))
        low = max(lowers, key=lambda f: Fraction(f[2] - f[0] * mid, f[1]))
        segs.append(_Segment(left, right, up, low))
    return tuple(segs)


def _count_polygon(P: RationalPolytope, m: int) -> int:
    segs = _polygon_segments(P)
    total = 0
    last = len(segs) - 1
    for j, s in enumerate(segs):
        x0 = ceil(m * s.left)
        x1 = floor(m * s.right) if j == last else ceil(m * s.right) - 1
        n = x1 - x0 + 1
        if n <= 0:
            continue
        a1, a2, b = s.upper
        total += floor_sum(n, -a2, a1, a1 * x0 - m * b)
        a1, a2, b = s.lower
        total += floor_sum(n, a2, a1, a1 * x0 - m * b)
        total += n
    return total


# ---------------------------------------------------------------------------
# general slicing


@dataclass(frozen=True)
class _Level:
    coef: np.ndarray  # (F,) coefficient of the coordinate being fixed
    rest: np.ndarray  # (F, s) coefficients of the already fixed suffix
    offset: np.ndarray  # (F,)


@lru_cache(maxsize=4096)
def _levels(P: RationalPolytope) -> tuple[_Level, ...]:
    """Facets of the projections of P onto coordinates c..d-1, for c = 0..d-1."""
    d = P.ambient_dim
    levels = []
    for c in range(d):
        if c == 0:
            facets = [(h.normal, h.offset) for h in P.facets]
        elif c == d - 1:
            lo = min(v[-1] for v in P.vertices)
            hi = max(v[-1] for v in P.vertices)
            facets = [
                ((lo.denominator,), lo.numerator),
                ((-hi.denominator,), -hi.numerator),
            ]
        else:
            proj = convex_hull([v[c:] for v in P.vertices], d - c)
            facets = [(h.normal, h.offset) for h in proj.facets]
        normals = np.array([list(f[0]) for f in facets], dtype=object)
        offsets = np.array([f[1] for f in facets], dtype=object)
        levels.append(_Level(normals[:, 0], normals[:, 1:], offsets))
    return tuple(levels)


def _dtype_for(P: RationalPolytope, m: int):
    levels = _levels(P)
    bound = max(abs(c) for v in P.vertices for c in v) * m + 1
    worst = 0
    for lv in levels:
        coeffs = max(abs(int(a)) for a in np.concatenate([lv.coef, lv.rest.ravel()]))
        offs = max(abs(int(b)) for b in lv.offset)
        worst = max(worst, coeffs * bound * P.ambient_dim + offs * m)
    return np.int64 if worst < _INT64_SAFE else object


def _ranges(level: _Level, suffix: np.ndarray, m: int, dtype):
    """Integer bounds ``lo, hi`` of the next coordinate for each suffix row."""
    coef = level.coef.astype(dtype)
    rhs = m * level.offset.astype(dtype)[None, :]
    if suffix.shape[1]:
        rhs = rhs - suffix @ level.rest.astype(dtype).T
    else:
        rhs = np.broadcast_to(rhs, (suffix.shape[0], rhs.shape[1]))
    pos, neg, zero = coef > 0, coef < 0, coef == 0
    lo = (-((-rhs[:, pos]) // coef[pos])).max(axis=1)
    hi = (rhs[:, neg] // coef[neg]).min(axis=1)
    if zero.any():
        bad = (rhs[:, zero] > 0).any(axis=1)
        hi = np.where(bad, lo - 1, hi)
    return lo, hi


def _expand(suffix, lo, hi, dtype):
    cnt = np.maximum(hi - lo + 1, 0).astype(np.int64)
    total = int(cnt.sum())
    starts = np.cumsum(cnt) - cnt
    within = np.arange(total, dtype=np.int64) - np.repeat(starts, cnt)
    col = np.repeat(lo, cnt) + within.astype(dtype)
    return np.column_stack([col, np.repeat(suffix, cnt, axis=0)]).astype(dtype)


def _slice(P: RationalPolytope, m: int, materialize: bool):
    levels = _levels(P)
    dtype = _dtype_for(P, m)
    suffix = np.zeros((1, 0), dtype=dtype)
    for c in range(P.ambient_dim - 1, 0, -1):
        lo, hi = _ranges(levels[c], suffix, m, dtype)
        suffix = _expand(suffix, lo, hi, dtype)
        if suffix.shape[0] == 0:
            return suffix if materialize else 0
    if materialize:
        lo, hi = _ranges(levels[0], suffix, m, dtype)
        return _expand(suffix, lo, hi, dtype)
    total = 0
    for start in range(0, suffix.shape[0], _CHUNK):
        lo, hi = _ranges(levels[0], suffix[start:start + _CHUNK], m, dtype)
        total += int(np.maximum(hi - lo + 1, 0).sum())
    return total


# ---------------------------------------------------------------------------
# public API


def lattice_points(P: RationalPolytope) -> list[tuple[int, ...]]:
    """All integer points of P, lexicographically sorted."""
    if P.ambient_dim == 1:
        lo, hi = P.vertices[0][0], P.vertices[-1][0]
        return [(x,) for x in range(ceil(lo), floor(hi) + 1)]
    rows = _slice(P, 1, materialize=True)
    return sorted(tuple(int(c) for c in r) for r in rows)


def count_dilation(P: RationalPolytope, m: int, method: str = "auto") -> int:
    """``|mP ∩ Z^d|``.

    ``method`` selects the kernel: ``"slice"`` forces the generic slicing
    path, ``"polygon"`` the edge-sum path (d = 2 only).
    """
    if m < 0:
        raise ValueError("dilation factor must be nonnegative")
    if m == 0:
        return 1
    d = P.ambient_dim
    if d == 1:
        lo, hi = P.vertices[0][0], P.vertices[-1][0]
        return max(floor(m * hi) - ceil(m * lo) + 1, 0)
    if method == "polygon" or (method == "auto" and d == 2):
        if d != 2:
            raise ValueError("polygon kernel needs d = 2")
        return _count_polygon(P, m)
    return _slice(P, m, materialize=False)


def ehrhart_vector(P: RationalPolytope, T: int, method: str = "auto") -> EhrhartVector:
    if T < 1:
        raise ValueError("T must be at least 1")
    counts = tuple(count_dilation(P, m, method) for m in range(T + 1))
    return EhrhartVector(counts, P.ambient_dim, P.denominator_k)
