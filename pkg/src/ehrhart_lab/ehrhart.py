"""Quasi-polynomial structure of Ehrhart counts.

Everything operates on exact integer count sequences ``y_0, y_1, ...``;
floats appear only in :func:`log_vector`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Sequence

import numpy as np

from .counting import EhrhartVector


class LengthError(ValueError):
    pass


class NotQuasiPolynomial(ValueError):
    pass


class NonIntegral(ValueError):
    pass


class NonTerminating(ValueError):
    pass


class ZeroCount(ValueError):
    pass


def _seq(y) -> list:
    return list(y.counts) if isinstance(y, EhrhartVector) else list(y)


def divisors(k: int) -> list[int]:
    return [r for r in range(1, k + 1) if k % r == 0]


def required_terms(d: int, k: int) -> int:
    """Number of counted terms needed to certify a period-k, degree-d fit."""
    return 2 * k * (d + 1)


# ---------------------------------------------------------------------------
# forward differences


def forward_difference(y: Sequence, k: int = 1, j: int = 1) -> list:
    """``j``-fold ``k``-step forward difference; ``(Δ_k y)_m = y_{m+k} - y_m``."""
    seq = _seq(y)
    if k < 1 or j < 0:
        raise ValueError("need k >= 1 and j >= 0")
    if len(seq) < j * k + 1:
        raise LengthError(f"need at least {j * k + 1} terms, got {len(seq)}")
    for _ in range(j):
        seq = [seq[m + k] - seq[m] for m in range(len(seq) - k)]
    return seq


# ---------------------------------------------------------------------------
# quasi-polynomials


@dataclass(frozen=True)
class QuasiPolynomial:
    """``L(q*period + r) = constituents[r](q)``; coefficients in ascending powers of q."""

    degree_d: int
    period: int
    constituents: tuple[tuple[Fraction, ...], ...]

    def __call__(self, m: int) -> Fraction:
        q, r = divmod(m, self.period)
        return sum(c * q**i for i, c in enumerate(self.constituents[r]))

    @property
    def leading_coefficients(self) -> tuple[Fraction, ...]:
        return tuple(f[self.degree_d] for f in self.constituents)


def _newton_to_monomial(values: Sequence[int]) -> tuple[Fraction, ...]:
    """Coefficients of the polynomial through ``(q, values[q])``, q = 0..n-1."""
    n = len(values)
    diffs = [Fraction(v) for v in values]
    newton = []
    for _ in range(n):
        newton.append(diffs[0])
        diffs = [b - a for a, b in zip(diffs, diffs[1:])]
    # sum_j newton[j] * C(q, j), expanded into powers of q
    coeffs = [Fraction(0)] * n
    falling = [Fraction(1)]  # q(q-1)...(q-j+1) in ascending powers
    for j in range(n):
        scale = newton[j] / factorial(j)
        for i, c in enumerate(falling):
            coeffs[i] += scale * c
        nxt = [Fraction(0)] * (len(falling) + 1)
        for i, c in enumerate(falling):
            nxt[i + 1] += c
            nxt[i] -= j * c
        falling = nxt
    return tuple(coeffs)


def _eval_poly(coeffs, q):
    return sum(c * q**i for i, c in enumerate(coeffs))


def fit_quasi_polynomial(y, d: int, k: int) -> QuasiPolynomial:
    """Interpolate each residue class mod k by a degree-<=d polynomial in q.

    Every supplied term beyond the interpolation nodes is checked; a mismatch
    raises :class:`NotQuasiPolynomial`.
    """
    seq = _seq(y)
    need = required_terms(d, k)
    if len(seq) < need:
        raise LengthError(f"need at least {need} terms, got {len(seq)}")
    constituents = []
    for r in range(k):
        vals = seq[r::k]
        f = _newton_to_monomial(vals[: d + 1])
        for q in range(d + 1, len(vals)):
            if _eval_poly(f, q) != vals[q]:
                raise NotQuasiPolynomial(f"residue {r} mod {k} breaks at q = {q}")
        constituents.append(f)
    return QuasiPolynomial(d, k, tuple(constituents))


def quasi_period(y, d: int, k: int) -> int:
    """Smallest divisor rho of k with ``Δ_rho^{d+1} y`` identically zero.

    With ``2k(d+1)`` terms the vanishing of the difference on every testable
    index is a proof, not a heuristic: it is a period-k quasi-polynomial of
    degree <= d that vanishes on k(d+1) consecutive integers.
    """
    seq = _seq(y)
    need = required_terms(d, k)
    if len(seq) < need:
        raise LengthError(f"need at least {need} terms, got {len(seq)}")
    for rho in divisors(k):
        if not any(forward_difference(seq, rho, d + 1)):
            return rho
    raise NotQuasiPolynomial(f"no period dividing {k} in degree {d}")


def _series_times_denominator(seq: Sequence, d: int, rho: int) -> list:
    """Coefficients of ``(sum y_m t^m) * (1 - t^rho)^(d+1)`` up to t^(len-1)."""
    factor = [0] * (rho * (d + 1) + 1)
    for j in range(d + 2):
        factor[j * rho] = (-1) ** j * comb(d + 1, j)
    out = []
    for n in range(len(seq)):
        out.append(sum(factor[i] * seq[n - i] for i in range(min(n, len(factor) - 1) + 1)))
    return out


def quasi_period_by_numerator(y, d: int, k: int) -> int:
    """Second oracle for the quasi-period: the smallest divisor rho of k for
    which the series numerator over ``(1 - t^rho)^(d+1)`` terminates."""
    seq = _seq(y)
    need = required_terms(d, k)
    if len(seq) < need:
        raise LengthError(f"need at least {need} terms, got {len(seq)}")
    for rho in divisors(k):
        num = _series_times_denominator(seq, d, rho)
        if not any(num[rho * (d + 1):]):
            return rho
    raise NotQuasiPolynomial(f"no period dividing {k} in degree {d}")


# ---------------------------------------------------------------------------
# delta vectors


@dataclass(frozen=True)
class DeltaVector:
    """Numerator ``δ_0 + ... + δ_{ρ(d+1)-1} t^{ρ(d+1)-1}`` over ``(1-t^ρ)^{d+1}``."""

    deltas: tuple[int, ...]
    period: int
    degree_d: int

    def __post_init__(self):
        if len(self.deltas) != self.period * (self.degree_d + 1):
            raise ValueError("delta vector has the wrong length")


def delta_vector(y, d: int, rho: int = 1) -> DeltaVector:
    seq = _seq(y)
    n = rho * (d + 1)
    if len(seq) < n:
        raise LengthError(f"need at least {n} terms, got {len(seq)}")
    num = _series_times_denominator(seq, d, rho)
    if any(Fraction(c).denominator != 1 for c in num):
        raise NonIntegral("numerator has non-integral coefficients")
    if any(num[n:]):
        raise NonTerminating(f"numerator does not terminate for d={d}, rho={rho}")
    return DeltaVector(tuple(int(c) for c in num[:n]), rho, d)


def _denominator_coeff(n: int, d: int, rho: int) -> int:
    # [t^n] (1 - t^rho)^-(d+1)
    if n < 0 or n % rho:
        return 0
    return comb(n // rho + d, d)


def eval_from_delta(delta: DeltaVector, m: int) -> int:
    """``L(m)`` recovered from the delta vector (power-series division)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    d, rho = delta.degree_d, delta.period
    return sum(c * _denominator_coeff(m - i, d, rho) for i, c in enumerate(delta.deltas) if c)


def extend(delta: DeltaVector, T: int, source_k: int | None = None) -> EhrhartVector:
    """The first T+1 counts implied by ``delta``."""
    counts = tuple(eval_from_delta(delta, m) for m in range(T + 1))
    return EhrhartVector(counts, delta.degree_d, source_k or delta.period)


def normalized_volume(delta: DeltaVector) -> Fraction:
    """``d! vol(P)``, i.e. the delta sum divided by ``rho^(d+1)``."""
    return Fraction(sum(delta.deltas), delta.period ** (delta.degree_d + 1))


def volume_from_differences(y, d: int, rho: int = 1) -> Fraction:
    """Normalized volume read off the constant sequence ``Δ_rho^d y``."""
    diff = forward_difference(y, rho, d)
    if len(set(diff)) != 1:
        raise NotQuasiPolynomial("Δ_rho^d y is not constant")
    return Fraction(diff[0], rho**d)


def log_vector(y) -> np.ndarray:
    seq = _seq(y)
    if any(v <= 0 for v in seq):
        raise ZeroCount("logarithm of a zero count")
    return np.log(np.array([float(v) for v in seq]))
