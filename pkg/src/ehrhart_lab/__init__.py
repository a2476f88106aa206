"""Ehrhart quasi-polynomials of rational polytopes and learning experiments on them."""

from .counting import EhrhartVector, count_dilation, ehrhart_vector, lattice_points
from .ehrhart import (
    DeltaVector,
    QuasiPolynomial,
    delta_vector,
    eval_from_delta,
    fit_quasi_polynomial,
    normalized_volume,
    quasi_period,
)
from .geometry import RationalPolytope, classify_point, convex_hull, transform
from .toric import gorenstein_index, markov_triples, polar, wps_fano_simplex

__version__ = "0.1.0"

__all__ = [
    "DeltaVector",
    "EhrhartVector",
    "QuasiPolynomial",
    "RationalPolytope",
    "classify_point",
    "convex_hull",
    "count_dilation",
    "delta_vector",
    "ehrhart_vector",
    "eval_from_delta",
    "fit_quasi_polynomial",
    "gorenstein_index",
    "lattice_points",
    "markov_triples",
    "normalized_volume",
    "polar",
    "quasi_period",
    "transform",
    "wps_fano_simplex",
]
