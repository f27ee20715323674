"""Local error bounds for composite inequalities ``f(g(x)) <= 0`` with a
max-affine outer function and a smooth inner map."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .analyzer import (
    AnalysisReport,
    BoundarySample,
    ProblemInstance,
    Tolerances,
    analyze,
    boundary_samples,
    dirderiv_global_error_bound,
    empirical_modulus,
    excess_vs_pointwise_equivalence,
    solution_set_distance,
    theoretical_modulus,
)
from .estimator import ErrorBoundAnalyzer
from .functions import (
    AffineMap,
    CompositeMap,
    MaxAffineFunction,
    OracleMap,
    PolynomialMap,
    QuadraticMap,
    composite,
    composite_dirderiv,
    hadamard_lower_dirderiv,
    sublevel_polyhedron,
)
from .geometry import (
    PolyCone,
    Polyhedron,
    distance_to_polyhedron,
    excess,
    excess_certificate,
    tangent_cone,
    vertices_and_rays,
)
from .regularity import (
    empirical_metric_regularity,
    linear_regularity,
    robinson_check,
    shapiro_epigraph_test,
    shapiro_set_test,
    tangent_chain_rule,
)

__all__ = [
    "__version__",
    "AnalysisReport",
    "BoundarySample",
    "ProblemInstance",
    "Tolerances",
    "analyze",
    "boundary_samples",
    "dirderiv_global_error_bound",
    "empirical_modulus",
    "excess_vs_pointwise_equivalence",
    "solution_set_distance",
    "theoretical_modulus",
    "ErrorBoundAnalyzer",
    "AffineMap",
    "CompositeMap",
    "MaxAffineFunction",
    "OracleMap",
    "PolynomialMap",
    "QuadraticMap",
    "composite",
    "composite_dirderiv",
    "hadamard_lower_dirderiv",
    "sublevel_polyhedron",
    "PolyCone",
    "Polyhedron",
    "distance_to_polyhedron",
    "excess",
    "excess_certificate",
    "tangent_cone",
    "vertices_and_rays",
    "empirical_metric_regularity",
    "linear_regularity",
    "robinson_check",
    "shapiro_epigraph_test",
    "shapiro_set_test",
    "tangent_chain_rule",
]
