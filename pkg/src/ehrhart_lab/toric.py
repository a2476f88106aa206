"""Polar duality, Fano polytopes, Gorenstein indices and Markov triangles."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .geometry import RationalPolytope, convex_hull


class OriginNotInterior(ValueError):
    pass


class BadWeights(ValueError):
    pass


# ---------------------------------------------------------------------------
# Smith normal form


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(A):
    """Return ``(S, U, V)`` with ``U A V = S`` diagonal, U and V unimodular,
    and each diagonal entry dividing the next."""
    S = [list(map(int, row)) for row in A]
    m, n = len(S), len(S[0])
    U, V = _identity(m), _identity(n)

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (S, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row_dst += f * row_src
        S[dst] = [a + f * b for a, b in zip(S[dst], S[src])]
        U[dst] = [a + f * b for a, b in zip(U[dst], U[src])]

    def add_col(src, dst, f):
        for M in (S, V):
            for row in M:
                row[dst] += f * row[src]

    for t in range(min(m, n)):
        while True:
            entries = [(abs(S[i][j]), i, j) for i in range(t, m) for j in range(t, n) if S[i][j]]
            if not entries:
                return S, U, V
            _, i, j = min(entries)
            swap_rows(t, i)
            swap_cols(t, j)
            p = S[t][t]
            dirty = False
            for i in range(t + 1, m):
                q = S[i][t] // p
                if q:
                    add_row(t, i, -q)
                dirty |= S[i][t] != 0
            for j in range(t + 1, n):
                q = S[t][j] // p
                if q:
                    add_col(t, j, -q)
                dirty |= S[t][j] != 0
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if S[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(bad, t, 1)
        if S[t][t] < 0:
            S[t] = [-a for a in S[t]]
            U[t] = [-a for a in U[t]]
    return S, U, V


# ---------------------------------------------------------------------------
# polar duality


def polar(P: RationalPolytope) -> RationalPolytope:
    """``{u : u.v >= -1 for every v in P}``.

    Each facet ``a.x >= b`` of P (b < 0 when the origin is interior)
    contributes the vertex ``a / -b``.
    """
    if any(h.offset >= 0 for h in P.facets):
        raise OriginNotInterior("the origin is not in the strict interior of P")
    verts = [tuple(Fraction(a, -h.offset) for a in h.normal) for h in P.facets]
    return convex_hull(verts, P.ambient_dim)


def origin_interior(P: RationalPolytope) -> bool:
    return all(h.offset < 0 for h in P.facets)


def is_fano(P: RationalPolytope) -> bool:
    return (
        P.is_lattice
        and origin_interior(P)
        and all(gcd(*(int(c) for c in v)) == 1 for v in P.vertices)
    )


def gorenstein_index(P: RationalPolytope) -> int:
    """Smallest k >= 1 such that k times the polar of P is a lattice polytope."""
    return polar(P).denominator_k


@dataclass(frozen=True)
class FanoRecord:
    polytope: RationalPolytope
    polar: RationalPolytope
    gorenstein_index: int


def fano_record(P: RationalPolytope) -> FanoRecord:
    if not is_fano(P):
        raise ValueError("polytope is not Fano")
    dual = polar(P)
    return FanoRecord(P, dual, dual.denominator_k)


def primitive(v) -> tuple[int, ...]:
    """The primitive lattice vector on the ray through the integer vector v."""
    ints = [int(c) for c in v]
    g = gcd(*ints)
    return tuple(c // g for c in ints)


# ---------------------------------------------------------------------------
# weighted projective spaces and Markov triples


def wps_fano_simplex(*weights: int) -> RationalPolytope:
    """Fano simplex of the weighted projective space P(w_0, ..., w_n).

    The vertices are the images of the standard basis of Z^(n+1) in the
    quotient lattice Z^(n+1) / Z w, read off from a Smith normal form of
    the weight column.
    """
    w = [int(x) for x in weights]
    if len(w) < 2 or any(x <= 0 for x in w):
        raise BadWeights("need at least two positive weights")
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            if gcd(w[i], w[j]) != 1:
                raise BadWeights(f"weights {w[i]} and {w[j]} are not coprime")
    _, U, _ = smith_normal_form([[x] for x in w])
    # U w = (1, 0, ..., 0); the remaining rows of U are the quotient map
    verts = [tuple(U[r][i] for r in range(1, len(w))) for i in range(len(w))]
    return convex_hull(verts, len(w) - 1)


@dataclass(frozen=True, order=True)
class MarkovTriple:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if not self.a <= self.b <= self.c:
            raise ValueError("Markov triple entries must be sorted")
        if 3 * self.a * self.b * self.c != self.a**2 + self.b**2 + self.c**2:
            raise ValueError(f"{(self.a, self.b, self.c)} is not a Markov triple")

    def astuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


def markov_triples(bound: int) -> list[MarkovTriple]:
    """All Markov triples with largest entry <= bound, by mutation from (1,1,1).

    Pruning at the bound is safe: every triple other than (1,1,1) has a
    neighbour with a strictly smaller maximum.
    """
    if bound < 1:
        raise ValueError("bound must be positive")
    start = (1, 1, 1)
    seen = {start}
    queue = deque([start])
    while queue:
        x, y, z = queue.popleft()
        for i in range(3):
            t = [x, y, z]
            others = t[:i] + t[i + 1:]
            t[i] = 3 * others[0] * others[1] - t[i]
            nxt = tuple(sorted(t))
            if nxt[0] > 0 and nxt[2] <= bound and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return [MarkovTriple(*t) for t in sorted(seen)]


def markov_polygon(triple: MarkovTriple) -> RationalPolytope:
    """The Fano triangle of P(a^2, b^2, c^2)."""
    a, b, c = triple.astuple()
    return wps_fano_simplex(a * a, b * b, c * c)
