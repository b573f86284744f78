"""Decorated ideal triangulations in lambda-length coordinates.

On a fixed triangulation a PL metric and a decorated hyperbolic metric share
one coordinate vector: the Euclidean edge lengths are read as lambda-lengths.
Under that identification the Euclidean and hyperbolic Delaunay conditions
are the same inequality, conformal scaling acts on lambda-lengths like it
acts on lengths, and the diagonal switch becomes the Ptolemy relation.  The
edge cross-ratios (shears) do not see the decoration, so they identify the
underlying hyperbolic structure, i.e. the discrete conformal class.
"""
from dataclasses import dataclass

import numpy as np

from .delaunay import (
    DELAUNAY_TOL,
    FlipLog,
    _flip_to_delaunay,
    classify,
    edge_delaunay_values,
)
from .exceptions import NotDelaunay, UnflippableEdge
from .surface import check_lengths

__all__ = [
    "DecoratedMetric",
    "penner_angle",
    "decorated_angles",
    "horocycle_lengths",
    "pl_to_decorated",
    "hyperbolic_delaunay_quantity",
    "hyperbolic_delaunay_edge",
    "ptolemy_flip",
    "ptolemy_delaunay",
    "replay_flips",
    "conformal_scale_lambda",
    "edge_shear",
    "shear_vector",
]


def penner_angle(L_i, L_j, L_k):
    """Horocyclic arc facing edge i: L_i / (L_j L_k).

    This is a length along a horocycle, not an angle in radians; it is
    unbounded above.
    """
    return L_i / (L_j * L_k)


def decorated_angles(surface, lam):
    """(H,) decorated angle at the corner opposite each halfedge."""
    L = lam[surface.faces >> 1]
    a = np.empty(surface.n_halfedges)
    a[surface.faces[:, 0]] = penner_angle(L[:, 0], L[:, 1], L[:, 2])
    a[surface.faces[:, 1]] = penner_angle(L[:, 1], L[:, 2], L[:, 0])
    a[surface.faces[:, 2]] = penner_angle(L[:, 2], L[:, 0], L[:, 1])
    return a


def horocycle_lengths(surface, lam):
    """Per-vertex horocycle length: sum of decorated angles at the vertex."""
    corner_vertex = surface.origin[surface.prev(np.arange(surface.n_halfedges))]
    return np.bincount(corner_vertex, weights=decorated_angles(surface, lam),
                       minlength=surface.n_vertices)


@dataclass
class DecoratedMetric:
    """Lambda-lengths on a triangulation.  Any positive vector is admissible."""

    surface: object
    lam: np.ndarray

    def __post_init__(self):
        self.lam = check_lengths(self.surface, self.lam)

    @property
    def hyp_length(self):
        return 2.0 * np.log(self.lam)

    @property
    def w(self):
        return horocycle_lengths(self.surface, self.lam)

    def angles(self):
        return decorated_angles(self.surface, self.lam)

    def copy(self):
        return DecoratedMetric(self.surface.copy(), self.lam.copy())


def pl_to_decorated(surface, lengths, tol=DELAUNAY_TOL):
    """Read a Delaunay PL metric's lengths as lambda-lengths.

    Raises NotDelaunay if some edge violates the Delaunay inequality; off the
    Delaunay cell the identification does not commute with flips.
    """
    lengths = check_lengths(surface, lengths)
    q = edge_delaunay_values(surface, lengths)
    bad = np.flatnonzero(q < -tol)
    if len(bad):
        raise NotDelaunay(f"edge {int(bad[0])} is not Delaunay (cos sum {q[bad[0]]:.3e})")
    return DecoratedMetric(surface.copy(), lengths.copy())


def hyperbolic_delaunay_quantity(x0, x1, x2, x3, x4):
    """Half the gap in  x0^2/(x1x2) + x0^2/(x3x4) <= x1/x2 + x2/x1 + x3/x4 + x4/x3.

    Non-negative exactly when the edge is Delaunay for the decoration.
    """
    lhs = x0 * x0 / (x1 * x2) + x0 * x0 / (x3 * x4)
    rhs = x1 / x2 + x2 / x1 + x3 / x4 + x4 / x3
    return 0.5 * (rhs - lhs)


def hyperbolic_delaunay_edge(D, e, tol=DELAUNAY_TOL):
    return classify(hyperbolic_delaunay_quantity(*D.surface.quad_lengths(D.lam, e)), tol)


def _ptolemy_diagonal(surface, lam, e):
    if surface.is_self_glued(e):
        raise UnflippableEdge(f"edge {e} has both sides in one triangle")
    x0, x1, x2, x3, x4 = surface.quad_lengths(lam, e)
    return (x1 * x3 + x2 * x4) / x0


def ptolemy_flip(D, e):
    """Diagonal switch at ``e`` with new lambda (x1 x3 + x2 x4) / x0; returns a copy."""
    out = D.copy()
    new = _ptolemy_diagonal(out.surface, out.lam, e)
    out.surface._flip(e)
    out.lam[e] = new
    return out


def ptolemy_delaunay(D, step=0, budget=None, log=None):
    """Ptolemy-flip until every edge satisfies the hyperbolic Delaunay inequality.

    Returns (DecoratedMetric, FlipLog); ``D`` is left unchanged.
    """
    out = D.copy()
    log = FlipLog() if log is None else log
    _flip_to_delaunay(out.surface, out.lam, _ptolemy_diagonal, log, step=step, budget=budget)
    return out, log


def replay_flips(D, edges):
    """Apply Ptolemy flips at ``edges`` in order (transport to another triangulation)."""
    out = D.copy()
    for e in edges:
        new = _ptolemy_diagonal(out.surface, out.lam, e)
        out.surface._flip(e)
        out.lam[e] = new
    return out


def conformal_scale_lambda(D, u):
    """lambda(e) * exp(u(v) + u(v')); horocycle lengths scale by exp(-2u)."""
    u = np.asarray(u, dtype=float)
    ends = D.surface.edge_endpoints()
    return DecoratedMetric(D.surface.copy(), D.lam * np.exp(u[ends[:, 0]] + u[ends[:, 1]]))


def edge_shear(D, e):
    """Cross-ratio x1 x3 / (x2 x4) of the quadrilateral around ``e``."""
    _, x1, x2, x3, x4 = D.surface.quad_lengths(D.lam, e)
    return (x1 * x3) / (x2 * x4)


def shear_vector(D):
    L = D.lam[D.surface.faces >> 1]
    # per halfedge: lambda of next and prev side in its face
    nxt = np.empty(D.surface.n_halfedges)
    prv = np.empty(D.surface.n_halfedges)
    nxt[D.surface.faces[:, 0]], prv[D.surface.faces[:, 0]] = L[:, 1], L[:, 2]
    nxt[D.surface.faces[:, 1]], prv[D.surface.faces[:, 1]] = L[:, 2], L[:, 0]
    nxt[D.surface.faces[:, 2]], prv[D.surface.faces[:, 2]] = L[:, 0], L[:, 1]
    return (nxt[0::2] * nxt[1::2]) / (prv[0::2] * prv[1::2])
