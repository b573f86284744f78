"""Discrete conformal uniformization of polyhedral metrics on closed surfaces."""

__version__ = "0.1.0"

from .delaunay import (
    EdgeStatus,
    FlipLog,
    diagonal_length,
    embed_quad,
    flip_edge,
    is_delaunay_edge,
    diagonal_derivative_check,
    make_delaunay,
    ptolemy_length,
)
from .estimator import DiscreteUniformizer
from .io import MetricDocument, parse_mesh_file
from .penner import (
    DecoratedMetric,
    conformal_scale_lambda,
    edge_shear,
    hyperbolic_delaunay_edge,
    penner_angle,
    pl_to_decorated,
    ptolemy_flip,
)
from .surface import (
    MarkedSurface,
    build_surface,
    conformal_scale,
    corner_angle,
    curvature_field,
    validate_metric,
    vertex_curvature,
)
from .uniformizer import (
    SolveReport,
    SolverConfig,
    conformal_equivalent,
    curvature_jacobian,
    curvature_map,
    delaunay_cell_inequalities,
    jacobian_symmetry_check,
    newton_uniformize,
    yamabe_flow,
)
