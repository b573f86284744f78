"""Intrinsic Delaunay predicates, edge flips and flip-to-Delaunay surgery.

Quadrilateral conventions follow :meth:`MarkedSurface.quad_lengths`: the
edge ``e = v1v2`` has length x0, the first triangle contributes x1 = v2v3
and x2 = v3v1, the second x3 = v1v4 and x4 = v4v2.  In the scalar helpers
``diagonal_length(x, y, z, w, a)`` the triangles are (x, y, a) and
(z, w, a) with y and z meeting at the same endpoint of ``a``; on a mesh
that is ``(x1, x2, x3, x4, x0)``.
"""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DegenerateTriangle, FlipBudgetExceeded, NonConvexQuad, UnflippableEdge
from .surface import check_lengths, corner_angle, cone_angles, validate_metric

__all__ = [
    "EdgeStatus",
    "FlipRecord",
    "FlipLog",
    "delaunay_quantity",
    "classify",
    "edge_delaunay_values",
    "is_delaunay_edge",
    "is_delaunay",
    "cocircular_edges",
    "embed_quad",
    "quad_layout",
    "diagonal_length",
    "ptolemy_length",
    "flip_edge",
    "make_delaunay",
    "flip_budget",
    "diagonal_derivative_check",
    "lemma44_derivative_check",
    "ptolemy_gradient",
    "cone_angle_drift",
]

DELAUNAY_TOL = 1e-12


class EdgeStatus(str, Enum):
    STRICT = "strictly_delaunay"
    COCIRCULAR = "cocircular"
    VIOLATED = "violated"


@dataclass(frozen=True)
class FlipRecord:
    edge: int
    old_length: float
    new_length: float
    step: int = 0


@dataclass
class FlipLog:
    records: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.records)

    def append(self, edge, old, new, step=0):
        self.records.append(FlipRecord(int(edge), float(old), float(new), int(step)))

    def extend(self, other):
        self.records.extend(other.records)

    def edges(self):
        return [r.edge for r in self.records]

    def __len__(self):
        return len(self.records)


# --- predicates -----------------------------------------------------------------

def delaunay_quantity(x0, x1, x2, x3, x4):
    """cos(alpha) + cos(alpha') written in lengths; >= 0 means Delaunay."""
    return (x1 ** 2 + x2 ** 2 - x0 ** 2) / (2 * x1 * x2) + (x3 ** 2 + x4 ** 2 - x0 ** 2) / (2 * x3 * x4)


def classify(q, tol=DELAUNAY_TOL):
    if q > tol:
        return EdgeStatus.STRICT
    if q < -tol:
        return EdgeStatus.VIOLATED
    return EdgeStatus.COCIRCULAR


def edge_delaunay_values(surface, lengths):
    """(E,) array of :func:`delaunay_quantity` for every edge.

    Pure algebra in the lengths, so it is also the hyperbolic predicate when
    ``lengths`` are lambda-lengths.
    """
    L = lengths[surface.faces >> 1]
    l0, l1, l2 = L[:, 0], L[:, 1], L[:, 2]
    cos = np.empty(surface.n_halfedges)
    cos[surface.faces[:, 0]] = (l1 ** 2 + l2 ** 2 - l0 ** 2) / (2 * l1 * l2)
    cos[surface.faces[:, 1]] = (l2 ** 2 + l0 ** 2 - l1 ** 2) / (2 * l2 * l0)
    cos[surface.faces[:, 2]] = (l0 ** 2 + l1 ** 2 - l2 ** 2) / (2 * l0 * l1)
    return cos[0::2] + cos[1::2]


def _check_quad(surface, lengths, e):
    bad = set(validate_metric(surface, lengths)) & {int(surface.face_of[2 * e]), int(surface.face_of[2 * e + 1])}
    if bad:
        raise DegenerateTriangle(f"face {min(bad)} next to edge {e} violates the triangle inequality")


def is_delaunay_edge(surface, lengths, e, tol=DELAUNAY_TOL):
    lengths = check_lengths(surface, lengths)
    _check_quad(surface, lengths, e)
    return classify(delaunay_quantity(*surface.quad_lengths(lengths, e)), tol)


def is_delaunay(surface, lengths, tol=DELAUNAY_TOL):
    return bool(np.all(edge_delaunay_values(surface, lengths) >= -tol))


def cocircular_edges(surface, lengths, tol=DELAUNAY_TOL):
    return [int(e) for e in np.flatnonzero(np.abs(edge_delaunay_values(surface, lengths)) <= tol)]


# --- geometry of one quadrilateral ----------------------------------------------

def quad_layout(x, y, z, w, a):
    """Planar points P, Q, R, S with |PQ| = a, |PR| = y, |QR| = x, |PS| = z, |QS| = w.

    R lies above the x-axis and S below, so the triangles sit on opposite
    sides of PQ.
    """
    alpha = corner_angle(a, y, x)
    beta = corner_angle(a, z, w)
    P = np.array([0.0, 0.0])
    Q = np.array([a, 0.0])
    R = np.array([y * np.cos(alpha), y * np.sin(alpha)])
    S = np.array([z * np.cos(beta), -z * np.sin(beta)])
    return np.array([P, Q, R, S])


def _is_convex(x, y, z, w, a, tol=DELAUNAY_TOL):
    at_p = corner_angle(a, y, x) + corner_angle(a, z, w)
    at_q = corner_angle(a, x, y) + corner_angle(a, w, z)
    return at_p < np.pi - tol and at_q < np.pi - tol


def diagonal_length(x, y, z, w, a):
    """Length of the other diagonal of the unfolded quadrilateral.

    Raises NonConvexQuad if the unfolding is not strictly convex, in which
    case the other diagonal leaves the quadrilateral.
    """
    if not _is_convex(x, y, z, w, a):
        raise NonConvexQuad("unfolded quadrilateral is not convex")
    pts = quad_layout(x, y, z, w, a)
    return float(np.hypot(*(pts[2] - pts[3])))


def _diagonal_unchecked(x, y, z, w, a):
    pts = quad_layout(x, y, z, w, a)
    return float(np.hypot(*(pts[2] - pts[3])))


def ptolemy_length(x, y, z, w, a):
    return (x * z + y * w) / a


def ptolemy_gradient(x, y, z, w, a):
    """Partials of the Ptolemy diagonal in the order (x, y, z, w, a)."""
    B = ptolemy_length(x, y, z, w, a)
    return np.array([z / a, w / a, x / a, y / a, -B / a])


def embed_quad(surface, lengths, e):
    """Isometric layout of the two triangles at ``e``: rows v1, v2, v3, v4.

    When both sides of ``e`` lie in one triangle that triangle is simply
    unfolded twice.
    """
    lengths = check_lengths(surface, lengths)
    _check_quad(surface, lengths, e)
    x0, x1, x2, x3, x4 = surface.quad_lengths(lengths, e)
    return quad_layout(x1, x2, x3, x4, x0)


def diagonal_derivative_check(x, y, z, w, a, step=1e-6):
    """Max |dA - dB| over the five partials at an inscribed quadrilateral.

    A is the Euclidean diagonal (differentiated by central differences of the
    planar layout), B the Ptolemy diagonal (exact gradient).
    """
    args = np.array([x, y, z, w, a], dtype=float)
    A = _diagonal_unchecked(*args)
    B = ptolemy_length(*args)
    if abs(A - B) > 1e-9:
        raise ValueError(f"quadrilateral is not inscribed: |A - B| = {abs(A - B):.3e}")
    fd = np.empty(5)
    for i in range(5):
        hi = step * max(1.0, abs(args[i]))
        up, dn = args.copy(), args.copy()
        up[i] += hi
        dn[i] -= hi
        fd[i] = (_diagonal_unchecked(*up) - _diagonal_unchecked(*dn)) / (2 * hi)
    return float(np.max(np.abs(fd - ptolemy_gradient(*args))))


lemma44_derivative_check = diagonal_derivative_check


# --- surgery ----------------------------------------------------------------------

def _euclidean_diagonal(surface, lengths, e):
    if surface.is_self_glued(e):
        raise UnflippableEdge(f"edge {e} has both sides in one triangle")
    x0, x1, x2, x3, x4 = surface.quad_lengths(lengths, e)
    return diagonal_length(x1, x2, x3, x4, x0)


def flip_budget(surface, lengths):
    lengths = np.asarray(lengths, dtype=float)
    spread = abs(np.log(lengths.max() / lengths.min()))
    return int(50 * surface.n_edges * (1 + spread))


def flip_edge(surface, lengths, e):
    """Switch ``e`` to the other diagonal, keeping the metric; returns copies."""
    lengths = check_lengths(surface, lengths)
    _check_quad(surface, lengths, e)
    new = _euclidean_diagonal(surface, lengths, e)
    M = surface.copy()
    d = lengths.copy()
    M._flip(e)
    d[e] = new
    return M, d


def _flip_to_delaunay(surface, lengths, new_length, log, step=0, budget=None, tol=DELAUNAY_TOL):
    """In-place flip queue shared by the Euclidean and Ptolemy variants."""
    if budget is None:
        budget = flip_budget(surface, lengths)
    values = edge_delaunay_values(surface, lengths)
    queue = deque(int(e) for e in np.flatnonzero(values < -tol))
    queued = np.zeros(surface.n_edges, dtype=bool)
    queued[list(queue)] = True
    flips = 0
    while queue:
        e = queue.popleft()
        queued[e] = False
        if delaunay_quantity(*surface.quad_lengths(lengths, e)) >= -tol:
            continue
        if flips >= budget:
            raise FlipBudgetExceeded(f"more than {budget} flips without reaching Delaunay")
        new = new_length(surface, lengths, e)
        log.append(e, lengths[e], new, step)
        _, hn, hp, _, tn, tp = surface.quad_halfedges(e)
        surface._flip(e)
        lengths[e] = new
        flips += 1
        for h in (hn, hp, tn, tp):
            f = int(h >> 1)
            if not queued[f]:
                queued[f] = True
                queue.append(f)
    return flips


def make_delaunay(surface, lengths, step=0, budget=None):
    """Flip violated edges until every edge is Delaunay.

    Cocircular edges are left alone.  Returns new (surface, lengths, FlipLog);
    the inputs are not modified.
    """
    lengths = check_lengths(surface, lengths)
    bad = validate_metric(surface, lengths)
    if bad:
        raise DegenerateTriangle(f"face {bad[0]} violates the triangle inequality")
    M = surface.copy()
    d = lengths.copy()
    log = FlipLog()
    _flip_to_delaunay(M, d, _euclidean_diagonal, log, step=step, budget=budget)
    return M, d, log


def cone_angle_drift(surface_a, lengths_a, surface_b, lengths_b):
    """Max vertexwise difference in cone angle between two triangulations."""
    return float(np.max(np.abs(cone_angles(surface_a, lengths_a) - cone_angles(surface_b, lengths_b))))
