"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI prints.
"""


class UniformizationError(Exception):
    code = "error"


# --- combinatorics / input -------------------------------------------------

class MeshError(UniformizationError):
    code = "mesh_error"


class NonManifold(MeshError):
    code = "non_manifold"


class Disconnected(MeshError):
    code = "disconnected"


class EulerObstruction(MeshError):
    code = "euler_obstruction"


class NonTriangular(MeshError):
    code = "non_triangular"


class OpenBoundary(MeshError):
    code = "open_boundary"


class ParseError(UniformizationError):
    code = "parse_error"

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


# --- metric ------------------------------------------------------------------

class InvalidMetric(UniformizationError):
    code = "invalid_metric"


class NonPositiveLength(InvalidMetric):
    code = "non_positive_length"


class DegenerateTriangle(InvalidMetric):
    code = "degenerate_triangle"


class GaussBonnetViolation(UniformizationError):
    """Angle sums disagree with the Euler characteristic. Always a bug."""

    code = "gauss_bonnet_violation"


class MetricDegenerate(InvalidMetric):
    code = "metric_degenerate"


class InvalidTarget(UniformizationError):
    code = "invalid_target"


# --- Delaunay surgery --------------------------------------------------------

class NotDelaunay(UniformizationError):
    code = "not_delaunay"


class UnflippableEdge(UniformizationError):
    code = "unflippable_edge"


class NonConvexQuad(UnflippableEdge):
    code = "non_convex_quad"


class FlipBudgetExceeded(UniformizationError):
    code = "flip_budget_exceeded"


# --- solvers -----------------------------------------------------------------

class SolverError(UniformizationError):
    """Solver gave up. ``report`` holds the best iterate reached."""

    code = "solver_error"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MaxItersExceeded(SolverError):
    code = "max_iters_exceeded"


class LineSearchStalled(SolverError):
    code = "line_search_stalled"


class StepTooLarge(SolverError):
    code = "step_too_large"
