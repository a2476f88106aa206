import itertools
from fractions import Fraction
from math import ceil, floor

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ehrhart_lab.geometry import convex_hull

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EX12 = [(-1, -1), (-1, 2), (2, -1)]
EX13 = [(5, -1), (-1, -1), (-1, Fraction(1, 2))]
EX12_COUNTS = (1, 10, 28, 55, 91)


def naive_count(P, m):
    """Enumerate the bounding box of mP and test every facet inequality."""
    if m == 0:
        return 1
    d = P.ambient_dim
    lo = [ceil(m * min(v[i] for v in P.vertices)) for i in range(d)]
    hi = [floor(m * max(v[i] for v in P.vertices)) for i in range(d)]
    total = 0
    for x in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        if all(sum(a * c for a, c in zip(h.normal, x)) >= m * h.offset for h in P.facets):
            total += 1
    return total


def random_lattice_polytope(rng, d, box=4):
    while True:
        k = int(rng.integers(1, 6))
        pts = [tuple(int(c) for c in row) for row in rng.integers(-box, box + 1, size=(d + k, d))]
        try:
            return convex_hull(pts, d)
        except ValueError:
            continue


@pytest.fixture
def ex12():
    return convex_hull(EX12)


@pytest.fixture
def ex13():
    return convex_hull(EX13)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
