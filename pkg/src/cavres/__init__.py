"""Billiard tracing and normalized mean-resistance computation for
two-dimensional wall cavities of rough rotating bodies.

The package simulates specular billiard trajectories inside normalized
cavities spanning the unit opening [-1/2, 1/2] x {0}, evaluates the
resistance functional they induce on a slowly rotating body, optimizes
cavity shape parameters, and verifies the reflection structure of the
near-optimal double-parabola cavity.
"""

from .analysis import (
    APPENDIX,
    AppendixConstants,
    CensusRecord,
    TheoremReport,
    census,
    diagonal_concentration,
    grid_census,
    scan_r_grid,
    scan_r_of_h,
    verify_appendix_structure,
    verify_corollary,
    verify_theorem1,
    verify_theorem2,
    write_census_csv,
)
from .batch import BatchTraceResult, trace_batch
from .billiard import (
    EntryState,
    TraceLimits,
    TrajectoryResult,
    entry_direction,
    exit_angle,
    exit_angle_of_direction,
    trace,
)
from .geometry import (
    CORNER_TOL,
    MIN_TRAVEL,
    OPENING_HALFWIDTH,
    BoundaryCurve,
    ConicArc,
    CornerHitError,
    GeometryLeakError,
    Hit,
    OpeningExit,
    Ray,
    Segment,
    Vec2,
    first_hit,
    normal_at,
    reflect_direction,
)
from .optimize import (
    ObjectiveSpec,
    OptimizationResult,
    OptimizerOptions,
    build_family_cavity,
    default_objective_spec,
    nelder_mead,
    optimize_family,
    pattern_search,
)
from .resistance import (
    BodySpec,
    IntegrationFailureError,
    QuadratureSpec,
    ResistanceEstimate,
    body_resistance,
    cavity_resistance,
    combine_cavity_resistances,
    perimeter_ratio,
    perimeter_ratio_second_order,
    simpson_resistance,
)
from .shapes import (
    Cavity,
    InvalidShapeError,
    QuadraticFamilyParams,
    cavity_from_dict,
    cavity_to_dict,
    load_cavity,
    make_double_parabola,
    make_flat,
    make_polyline,
    make_quadratic,
    make_rectangle,
    make_right_triangle,
    save_cavity,
)

__version__ = "0.1.0"
