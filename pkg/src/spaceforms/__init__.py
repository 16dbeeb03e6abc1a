"""Closed geodesics on Finsler space forms S^n/Z_p.

Numerical search for non-contractible closed geodesics (twisted discrete
loops, energy descent + Newton refinement), linearized return maps and
spectral classification, and exact integer/rational engines for index
iteration, equivariant Betti numbers, Morse inequalities and the
multiplicity/stability counting bounds.
"""

from jax import config as _jax_config

_jax_config.update("jax_enable_x64", True)

from .manifold import SpaceFormSpec, TangentSample, deck_apply
from .metrics import MetricSpec, eval_metric, reversibility, metric_pinch_check
from .loops import (
    DiscreteLoop,
    loop_energy,
    loop_length,
    loop_energy_gradient,
    loop_residual,
    iterate_loop,
    reverse_loop,
    detect_self_intersections,
)
from .search import GeodesicRecord, find_geodesics
from .linearized import (
    PoincareMap,
    SpectralSummary,
    poincare_map,
    poincare_map_from_initial,
    spectral_summary,
    numerical_morse_index,
)
from .indexcalc import (
    NormalForm,
    IndexSequence,
    floor_ops,
    E_m_phi_m,
    index_iterate,
    nullity_iterate,
    mean_index,
    index_sequence,
    bound_min_length,
    bound_index_from_length,
    bound_mean_index,
)
from .topology import (
    BettiTable,
    MorseData,
    MorseEntry,
    CountingReport,
    betti,
    betti_table,
    poincare_series_coeffs,
    morse_inequality_check,
    thm1_counting,
    thm1_contradiction_data,
    standard_metric_index,
    index_sandwich_check,
    thm3_count,
)

__all__ = [
    "SpaceFormSpec",
    "TangentSample",
    "deck_apply",
    "MetricSpec",
    "eval_metric",
    "reversibility",
    "metric_pinch_check",
    "DiscreteLoop",
    "loop_energy",
    "loop_length",
    "loop_energy_gradient",
    "loop_residual",
    "iterate_loop",
    "reverse_loop",
    "detect_self_intersections",
    "GeodesicRecord",
    "find_geodesics",
    "PoincareMap",
    "SpectralSummary",
    "poincare_map",
    "poincare_map_from_initial",
    "spectral_summary",
    "numerical_morse_index",
    "NormalForm",
    "IndexSequence",
    "floor_ops",
    "E_m_phi_m",
    "index_iterate",
    "nullity_iterate",
    "mean_index",
    "index_sequence",
    "bound_min_length",
    "bound_index_from_length",
    "bound_mean_index",
    "BettiTable",
    "MorseData",
    "MorseEntry",
    "CountingReport",
    "betti",
    "betti_table",
    "poincare_series_coeffs",
    "morse_inequality_check",
    "thm1_counting",
    "thm1_contradiction_data",
    "standard_metric_index",
    "index_sandwich_check",
    "thm3_count",
]
