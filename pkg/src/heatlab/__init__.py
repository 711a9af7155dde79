"""Numerical laboratory for heat-flow variation functionals on rotationally
symmetric weighted manifolds.

The package is organized in layers: geometry (weight profiles and BV data),
grid (face ladders and cell measures), operator (weighted divergence-form
generator), solver (time stepping and exhaustion), functionals (mass,
variation, flux, extrapolation), experiments (verdict-producing drivers) and
cli (schema-checked runs with stable reports).
"""

__version__ = "0.1.0"

from .errors import InvalidArgumentError, NumericalFailure, RangeError
from .geometry import (LOG_MAX_GRID, LOG_MAX_SCALAR, RadialBVDatum,
                       RadialManifold, ball_indicator, ball_volume,
                       complement_indicator, constant_one, custom_manifold,
                       euclidean, exact_total_variation, log_area_integral,
                       perimeter_ball, piecewise, power_exp_weight,
                       sphere_constant, warped_cone)
from .grid import Grid, build_grid, grid_from_faces, subgrid
from .operator import DIRICHLET, NEUMANN, WeightedOperator, assemble
from .solver import (EXHAUSTION_SLACK, ExhaustionProbe, RadialSolution,
                     SemigroupResult, SolveControls, advance_states, evolve,
                     exhaustion_ladder, heat_semigroup, overflow_safe_radius,
                     project_datum, semigroup_check)
from .functionals import (ExtrapolationResult, FluxProfile, TVSeries,
                          extrapolate_limit, face_variation_terms,
                          flux_profile, l1_mu_distance, total_variation,
                          weighted_inner, weighted_l1_norm, weighted_mass)
from .experiments import (ComparisonData, ExperimentReport, blowup_probe,
                          blowup_sweep, comparison_check, completeness_probe,
                          degiorgi_sweep, tail_probe)

__all__ = [
    "InvalidArgumentError", "NumericalFailure", "RangeError",
    "LOG_MAX_GRID", "LOG_MAX_SCALAR", "RadialBVDatum", "RadialManifold",
    "ball_indicator", "ball_volume", "complement_indicator", "constant_one",
    "custom_manifold", "euclidean", "exact_total_variation",
    "log_area_integral", "perimeter_ball", "piecewise", "power_exp_weight",
    "sphere_constant", "warped_cone",
    "Grid", "build_grid", "grid_from_faces", "subgrid",
    "DIRICHLET", "NEUMANN", "WeightedOperator", "assemble",
    "EXHAUSTION_SLACK", "ExhaustionProbe", "RadialSolution",
    "SemigroupResult", "SolveControls", "advance_states", "evolve",
    "exhaustion_ladder", "heat_semigroup", "overflow_safe_radius",
    "project_datum", "semigroup_check",
    "ExtrapolationResult", "FluxProfile", "TVSeries", "extrapolate_limit",
    "face_variation_terms", "flux_profile", "l1_mu_distance",
    "total_variation", "weighted_inner", "weighted_l1_norm", "weighted_mass",
    "ComparisonData", "ExperimentReport", "blowup_probe", "blowup_sweep",
    "comparison_check", "completeness_probe", "degiorgi_sweep", "tail_probe",
]
