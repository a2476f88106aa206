"""Random polytope datasets with exact Ehrhart labels.

Lattice datasets follow the classic recipe: draw d+k points in [-5,5]^d
(k uniform in 1..5), take the hull, retry until it is full-dimensional.
Rational datasets draw r first, use the box [-5r,5r]^d, translate by a
random lattice point of the hull and divide by r.

Only ``2k(d+1)`` terms are ever counted; longer feature vectors come from
the certified delta vector.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from multiprocessing import Pool
from pathlib import Path
from typing import Iterable

import numpy as np

from . import ehrhart
from .counting import EhrhartVector, ehrhart_vector, lattice_points
from .geometry import DimensionDeficient, RationalPolytope, convex_hull, transform
from .toric import fano_record, is_fano, origin_interior, primitive

SCHEMA_VERSION = 1
KIND_CODES = {"lattice": 1, "rational": 2, "fano": 3}


class RetryLimit(RuntimeError):
    pass


class NoLatticePoint(ValueError):
    pass


class SchemaError(ValueError):
    pass


class UnderfilledWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GenerationParams:
    kind: str = "lattice"
    dims: tuple[int, ...] = (2, 3, 4)
    per_class: int = 200
    T: int = 100
    box: int = 5
    r_range: tuple[int, int] = (2, 6)
    periods: tuple[int, ...] = (2, 3, 4, 5, 6)
    seed: int = 0
    max_draws: int | None = None  # per dimension; default 40 * per_class * classes
    retry_limit: int = 1000
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("lattice", "rational"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if min(self.dims) < 2:
            raise ValueError("dimensions must be at least 2")
        if self.r_range[0] < 2 or self.r_range[1] < self.r_range[0]:
            raise ValueError("bad r range")

    def classes(self, d: int) -> list:
        if self.kind == "lattice":
            return [d]
        return [(d, rho) for rho in self.periods]

    def draw_budget(self, d: int) -> int:
        if self.max_draws is not None:
            return self.max_draws
        return 40 * self.per_class * len(self.classes(d))


@dataclass(frozen=True)
class DataPoint:
    features: EhrhartVector
    dim_label: int
    volume_label: Fraction
    quasi_period_label: int | None
    denominator: int
    seed_info: tuple[int, int] | None = field(default=None, compare=False)

    def key(self):
        return (self.features.counts, self.dim_label, self.volume_label, self.quasi_period_label)

    def class_label(self):
        if self.quasi_period_label is None:
            return self.dim_label
        return (self.dim_label, self.quasi_period_label)


@dataclass(frozen=True)
class Dataset:
    kind: str
    T: int
    points: tuple[DataPoint, ...]
    params: GenerationParams | None = field(default=None, compare=False)
    underfilled: tuple = field(default=(), compare=False)

    def __len__(self):
        return len(self.points)

    def counts(self) -> np.ndarray:
        return np.array([[float(v) for v in p.features.counts] for p in self.points])

    def log_counts(self) -> np.ndarray:
        return np.vstack([ehrhart.log_vector(p.features) for p in self.points])

    def features(self, kind: str = "raw") -> np.ndarray:
        if kind == "raw":
            return self.counts()
        if kind == "log":
            return self.log_counts()
        raise ValueError(f"unknown feature kind {kind!r}")

    def dims(self) -> np.ndarray:
        return np.array([p.dim_label for p in self.points])

    def volumes(self) -> np.ndarray:
        return np.array([float(p.volume_label) for p in self.points])

    def periods(self) -> np.ndarray:
        return np.array([p.quasi_period_label for p in self.points])

    def subset(self, mask) -> "Dataset":
        pts = tuple(p for p, keep in zip(self.points, mask) if keep)
        return replace(self, points=pts)


# ---------------------------------------------------------------------------
# exact labels


@dataclass(frozen=True)
class EhrhartProfile:
    counted: EhrhartVector
    features: EhrhartVector
    quasi_period: int
    delta: ehrhart.DeltaVector
    volume: Fraction


def ehrhart_profile(P: RationalPolytope, T: int) -> EhrhartProfile:
    """Count ``2k(d+1)`` terms, certify the quasi-period, extend to T+1 terms."""
    d, k = P.ambient_dim, P.denominator_k
    counted = ehrhart_vector(P, ehrhart.required_terms(d, k) - 1)
    rho = ehrhart.quasi_period(counted, d, k)
    delta = ehrhart.delta_vector(counted, d, rho)
    features = ehrhart.extend(delta, T, source_k=k)
    overlap = min(len(counted), len(features))
    if features.counts[:overlap] != counted.counts[:overlap]:
        raise AssertionError("delta-vector extension disagrees with counted terms")
    return EhrhartProfile(counted, features, rho, delta, ehrhart.normalized_volume(delta))


def verify_datapoint(p: DataPoint) -> None:
    """Recompute the labels of ``p`` from its stored counts."""
    y, d, k = p.features.counts, p.dim_label, p.denominator
    need = ehrhart.required_terms(d, k)
    if len(y) >= need:
        rho = ehrhart.quasi_period(y, d, k)
        if p.quasi_period_label is not None and rho != p.quasi_period_label:
            raise AssertionError(f"stored quasi-period {p.quasi_period_label}, recomputed {rho}")
    rho = p.quasi_period_label or 1
    vol = ehrhart.normalized_volume(ehrhart.delta_vector(y, d, rho))
    if vol != p.volume_label:
        raise AssertionError(f"stored volume {p.volume_label}, recomputed {vol}")
    if ehrhart.volume_from_differences(y, d, rho) != vol:
        raise AssertionError("difference and delta volumes disagree")


# ---------------------------------------------------------------------------
# generators


def draw_points(d: int, rng, box: int) -> np.ndarray:
    """d+k integer points uniform in [-box, box]^d with k uniform in 1..5."""
    k = int(rng.integers(1, 6))
    return rng.integers(-box, box + 1, size=(d + k, d))


def draw_dilation(rng, r_range: tuple[int, int]) -> int:
    """The dilation factor r of a rational draw, uniform on ``r_range`` (inclusive)."""
    return int(rng.integers(r_range[0], r_range[1] + 1))


def draw_full_dimensional(d: int, rng, box: int, retry_limit: int) -> RationalPolytope:
    for _ in range(retry_limit):
        pts = draw_points(d, rng, box)
        try:
            return convex_hull([tuple(int(c) for c in p) for p in pts], d)
        except DimensionDeficient:
            continue
    raise RetryLimit(f"no full-dimensional hull in {retry_limit} draws")


def gen_lattice_datapoint(d: int, rng, T: int = 100, box: int = 5, retry_limit: int = 1000) -> DataPoint:
    P = draw_full_dimensional(d, rng, box, retry_limit)
    prof = ehrhart_profile(P, T)
    return DataPoint(prof.features, d, prof.volume, None, 1)


def gen_rational_datapoint(
    d: int,
    rng,
    T: int = 100,
    box: int = 5,
    r_range: tuple[int, int] = (2, 15),
    retry_limit: int = 1000,
) -> DataPoint:
    r = draw_dilation(rng, r_range)
    for _ in range(retry_limit):
        Q = draw_full_dimensional(d, rng, box * r, retry_limit)
        pts = lattice_points(Q)
        if pts:
            break
    else:
        raise NoLatticePoint("no lattice point found")
    v = pts[int(rng.integers(len(pts)))]
    P = transform(Q, t=[-c for c in v], s=Fraction(1, r))
    prof = ehrhart_profile(P, T)
    return DataPoint(prof.features, d, prof.volume, prof.quasi_period, P.denominator_k)


@dataclass(frozen=True)
class FanoPoint:
    features: EhrhartVector  # Ehrhart vector of the polar polytope
    gorenstein_index: int
    vertices: tuple


def gen_fano_polytope(d: int, rng, box: int = 5, retry_limit: int = 1000) -> RationalPolytope:
    """Random Fano polytope: a draw whose hull has the origin inside, with
    every point replaced by the primitive vector on its ray."""
    for _ in range(retry_limit):
        P = draw_full_dimensional(d, rng, box, retry_limit)
        if not origin_interior(P):
            continue
        F = convex_hull([primitive(v) for v in P.vertices], d)
        if is_fano(F):
            return F
    raise RetryLimit(f"no Fano polytope in {retry_limit} draws")


def fano_point(P: RationalPolytope, T: int) -> FanoPoint:
    rec = fano_record(P)
    prof = ehrhart_profile(rec.polar, T)
    return FanoPoint(prof.features, rec.gorenstein_index, P.vertices)


# ---------------------------------------------------------------------------
# datasets


def point_rng(seed: int, kind: str, d: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, KIND_CODES[kind], d, index]))


def _generate_one(args) -> DataPoint:
    params, d, index = args
    rng = point_rng(params.seed, params.kind, d, index)
    if params.kind == "lattice":
        p = gen_lattice_datapoint(d, rng, params.T, params.box, params.retry_limit)
    else:
        p = gen_rational_datapoint(d, rng, params.T, params.box, params.r_range, params.retry_limit)
    return replace(p, seed_info=(params.seed, index))


def _index_stream(params: GenerationParams, d: int, pool):
    budget = params.draw_budget(d)
    batch = 32 * max(params.workers, 1)
    for start in range(0, budget, batch):
        jobs = [(params, d, i) for i in range(start, min(start + batch, budget))]
        results = pool.imap(_generate_one, jobs) if pool else map(_generate_one, jobs)
        yield from results


def build_dataset(params: GenerationParams) -> Dataset:
    """Generate, deduplicate and downsample to ``per_class`` points per class.

    Draw i of dimension d always uses the stream ``(seed, kind, d, i)``, so
    the result does not depend on ``workers``.
    """
    pool = Pool(params.workers) if params.workers > 1 else None
    chosen: list[DataPoint] = []
    underfilled = []
    try:
        for d in sorted(params.dims):
            wanted = params.classes(d)
            buckets: dict = {c: [] for c in wanted}
            seen = set()
            for p in _index_stream(params, d, pool):
                c = p.class_label()
                if c in buckets and p.key() not in seen:
                    seen.add(p.key())
                    buckets[c].append(p)
                if all(len(b) >= params.per_class for b in buckets.values()):
                    break
            sampler = np.random.default_rng(np.random.SeedSequence([params.seed, 99, d]))
            for c in wanted:
                b = buckets[c]
                if len(b) < params.per_class:
                    underfilled.append(c)
                    chosen.extend(b)
                else:
                    idx = sorted(sampler.choice(len(b), params.per_class, replace=False))
                    chosen.extend(b[i] for i in idx)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    if underfilled:
        warnings.warn(f"generation budget exhausted for classes {underfilled}", UnderfilledWarning)
    return Dataset(params.kind, params.T, tuple(chosen), params, tuple(underfilled))


def dedup(points: Iterable[DataPoint]) -> list[DataPoint]:
    seen, out = set(), []
    for p in points:
        if p.key() not in seen:
            seen.add(p.key())
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# persistence


def write_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"schema={SCHEMA_VERSION}", f"T={ds.T}", f"kind={ds.kind}"])
        for p in ds.points:
            rho = "" if p.quasi_period_label is None else str(p.quasi_period_label)
            vol = p.volume_label
            w.writerow(
                [p.dim_label, vol.numerator, vol.denominator, rho, p.denominator]
                + [str(v) for v in p.features.counts]
            )


def _parse_header(row) -> tuple[int, str]:
    try:
        fields = dict(item.split("=", 1) for item in row)
        version, T, kind = int(fields["schema"]), int(fields["T"]), fields["kind"]
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"bad header {row!r}") from exc
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version}")
    if kind not in ("lattice", "rational"):
        raise SchemaError(f"unknown kind {kind!r}")
    return T, kind


def read_dataset(path) -> Dataset:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("empty dataset file")
    T, kind = _parse_header(rows[0])
    points = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != T + 6:
            raise SchemaError(f"line {lineno}: expected {T + 6} fields, got {len(row)}")
        try:
            d, num, den = int(row[0]), int(row[1]), int(row[2])
            rho = int(row[3]) if row[3].strip() else None
            k = int(row[4])
            counts = tuple(int(v) for v in row[5:])
        except ValueError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from exc
        if kind == "lattice" and rho is not None:
            raise SchemaError(f"line {lineno}: lattice rows carry no quasi-period")
        points.append(DataPoint(EhrhartVector(counts, d, k), d, Fraction(num, den), rho, k))
    return Dataset(kind, T, tuple(points))
