"""sigmalab: a numerical laboratory for world-function geometries.

A geometry is specified by one function of two points, sigma(P, Q) =
half the squared distance.  On top of that single datum the package
implements the coordinate-free vector calculus (scalar products,
absolute parallelism, collinearity), the conventional Riemannian-side
constructions it is compared against (metric fields, geodesics,
induced world functions, path-dependent parallel transport), numerical
checks of the four conditions characterizing proper Euclidean n-space,
and samplers that resolve the zero sets of tube/line definitions and
measure their local dimension.
"""

from .worldfunc import (
    EvaluationError,
    GeometryError,
    WorldFunction,
    as_point,
    as_points,
    make_distorted_minkowski,
    make_euclidean,
    make_minkowski,
    make_sphere,
)
from .vectors import (
    IndefiniteNormError,
    PointPairVector,
    collinearity_surface_residual,
    fit_proportionality,
    is_collinear,
    is_parallel,
    pair_product,
    proportional_components_check,
    scalar_product,
    squared_norm,
)
from .riemann import (
    GeodesicSolution,
    MetricField,
    TransportResult,
    christoffel,
    flat_metric,
    geodesic_bvp,
    geodesic_integrate,
    metric_derivative,
    minkowski_metric,
    parallel_transport,
    riemannian_scalar_product,
    sigma_gradient,
    sphere_great_circle_points,
    sphere_metric,
    world_function_from_metric,
)
from .euclidean import (
    BasisFrame,
    ConditionReport,
    check_condition_I,
    check_condition_II,
    check_condition_III,
    check_condition_IV,
    gram_determinant,
    gram_matrix,
    run_all_conditions,
    sigma_coordinates,
)
from .tubes import (
    ComparisonReport,
    DimensionUnresolvedError,
    TubeSampleSet,
    TubeSpec,
    classify_dimension,
    compare_definitions,
    fit_spacelike_family,
    residual_band_exponent,
    sample_tube,
    tube_cross_section_thickness,
    tube_residual,
    tube_residual_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # worldfunc
    "GeometryError", "EvaluationError", "WorldFunction", "as_point", "as_points",
    "make_euclidean", "make_minkowski", "make_distorted_minkowski", "make_sphere",
    # vectors
    "IndefiniteNormError", "PointPairVector", "pair_product", "scalar_product",
    "squared_norm", "is_parallel", "is_collinear", "collinearity_surface_residual",
    "fit_proportionality", "proportional_components_check",
    # riemann
    "MetricField", "GeodesicSolution", "TransportResult", "flat_metric",
    "sphere_metric", "minkowski_metric", "metric_derivative", "christoffel",
    "geodesic_integrate", "geodesic_bvp", "world_function_from_metric",
    "sigma_gradient", "riemannian_scalar_product", "parallel_transport",
    "sphere_great_circle_points",
    # euclidean
    "BasisFrame", "ConditionReport", "gram_matrix", "gram_determinant",
    "check_condition_I", "sigma_coordinates", "check_condition_II",
    "check_condition_III", "check_condition_IV", "run_all_conditions",
    # tubes
    "TubeSpec", "TubeSampleSet", "ComparisonReport", "DimensionUnresolvedError",
    "tube_residual", "tube_residual_gradient", "sample_tube", "classify_dimension",
    "residual_band_exponent", "tube_cross_section_thickness", "compare_definitions",
    "fit_spacelike_family",
]
