"""Closed triangulated marked surfaces and the PL-metric layer.

Connectivity is a halfedge structure stored in flat integer arrays.  Edge
``e`` owns halfedges ``2e`` and ``2e + 1`` (so ``twin(h) == h ^ 1``); this
keeps edge ids stable across diagonal switches, which only rewire ``next``,
``origin`` and the face table.  Corners are addressed per halfedge: the
corner *opposite* halfedge ``h`` sits at ``origin[prev(h)]``.  Loops,
multi-edges and faces glued to themselves are all representable.

A PL metric is a float array ``lengths`` indexed by edge id.
"""
from collections import deque

import numpy as np

from .exceptions import (
    DegenerateTriangle,
    Disconnected,
    EulerObstruction,
    GaussBonnetViolation,
    InvalidMetric,
    MeshError,
    NonManifold,
    NonPositiveLength,
)

__all__ = [
    "MarkedSurface",
    "build_surface",
    "corner_angle",
    "halfedge_angles",
    "halfedge_cotangents",
    "vertex_curvature",
    "curvature_field",
    "cone_angles",
    "conformal_scale",
    "validate_metric",
    "check_lengths",
]

DEGENERATE_TOL = 1e-12
GAUSS_BONNET_TOL = 1e-9


class MarkedSurface:
    """Halfedge connectivity of a closed oriented triangulated surface.

    Attributes
    ----------
    origin : (H,) int array
        Tail vertex of each halfedge.
    next : (H,) int array
        Next halfedge counter-clockwise inside the same face.
    faces : (F, 3) int array
        The three halfedges of every face, in ``next`` order.
    n_vertices : int
    """

    def __init__(self, origin, next_he, faces, n_vertices):
        self.origin = np.asarray(origin, dtype=np.int64)
        self.next = np.asarray(next_he, dtype=np.int64)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.n_vertices = int(n_vertices)
        self.face_of = np.empty(len(self.origin), dtype=np.int64)
        self.face_of[self.faces.ravel()] = np.repeat(np.arange(len(self.faces)), 3)

    # -- sizes -------------------------------------------------------------
    @property
    def n_halfedges(self):
        return len(self.origin)

    @property
    def n_edges(self):
        return len(self.origin) // 2

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    # -- navigation --------------------------------------------------------
    @staticmethod
    def twin(h):
        return h ^ 1

    def prev(self, h):
        return self.next[self.next[h]]

    def edge_vertices(self, e):
        return int(self.origin[2 * e]), int(self.origin[2 * e + 1])

    def edge_endpoints(self):
        """(E, 2) array of edge endpoints."""
        return self.origin.reshape(-1, 2)

    def opposite_vertex(self, h):
        return int(self.origin[self.prev(h)])

    def is_self_glued(self, e):
        """True when both sides of ``e`` lie in the same face."""
        return self.face_of[2 * e] == self.face_of[2 * e + 1]

    def quad_halfedges(self, e):
        """Halfedges (h, hn, hp, t, tn, tp) of the two triangles around ``e``.

        ``h = 2e`` runs v1 -> v2; its face is (v1, v2, v3).  ``t = 2e + 1``
        runs v2 -> v1 in face (v2, v1, v4).
        """
        h = 2 * e
        t = h + 1
        hn = self.next[h]
        tn = self.next[t]
        return h, hn, self.next[hn], t, tn, self.next[tn]

    def quad_lengths(self, lengths, e):
        """Lengths (x0, x1, x2, x3, x4) around ``e``.

        x1 = v2v3, x2 = v3v1 (first triangle), x3 = v1v4, x4 = v4v2 (second);
        x1 faces x3 and x2 faces x4 across the quadrilateral.
        """
        h, hn, hp, _, tn, tp = self.quad_halfedges(e)
        return (lengths[e], lengths[hn >> 1], lengths[hp >> 1],
                lengths[tn >> 1], lengths[tp >> 1])

    def vertex_degrees(self):
        return np.bincount(self.origin, minlength=self.n_vertices)

    def copy(self):
        return MarkedSurface(self.origin.copy(), self.next.copy(),
                             self.faces.copy(), self.n_vertices)

    # -- mutation ----------------------------------------------------------
    def _flip(self, e):
        """Rewire edge ``e`` to the other diagonal of its quadrilateral.

        No geometric checks; callers decide whether the flip is legal.
        """
        h, hn, hp, t, tn, tp = self.quad_halfedges(e)
        fh, ft = self.face_of[h], self.face_of[t]
        v3 = self.origin[hp]
        v4 = self.origin[tp]
        # face fh becomes (v4, v3, v1), face ft becomes (v3, v4, v2)
        self.origin[h] = v4
        self.origin[t] = v3
        self.next[h] = hp
        self.next[hp] = tn
        self.next[tn] = h
        self.next[t] = tp
        self.next[tp] = hn
        self.next[hn] = t
        self.faces[fh] = (h, hp, tn)
        self.faces[ft] = (t, tp, hn)
        self.face_of[[h, hp, tn]] = fh
        self.face_of[[t, tp, hn]] = ft

    def face_vertex_table(self):
        """Faces as vertex triples and as edge-id triples (side i = v_i -> v_i+1)."""
        return self.origin[self.faces], self.faces >> 1

    def __repr__(self):
        return (f"MarkedSurface(V={self.n_vertices}, E={self.n_edges}, "
                f"F={self.n_faces}, chi={self.euler_characteristic})")


def _infer_gluing(faces):
    """Pair face sides by unordered vertex pair; needs an unambiguous mesh."""
    sides = {}
    for f, tri in enumerate(faces):
        for i in range(3):
            a, b = int(tri[i]), int(tri[(i + 1) % 3])
            if a == b:
                raise NonManifold(f"face {f} has a repeated vertex; pass explicit edge gluing")
            sides.setdefault((min(a, b), max(a, b)), []).append((f, i))
    face_edges = np.empty((len(faces), 3), dtype=np.int64)
    for e, (key, occ) in enumerate(sides.items()):
        if len(occ) != 2:
            raise NonManifold(f"edge {key} has {len(occ)} incident face sides")
        for f, i in occ:
            face_edges[f, i] = e
    return face_edges


def build_surface(faces, face_edges=None):
    """Glue triangles into a closed marked surface.

    Parameters
    ----------
    faces : (F, 3) array-like of vertex ids
        Vertex ids must be ``0..V-1`` and every id must be used.
    face_edges : (F, 3) array-like of edge ids, optional
        ``face_edges[f][i]`` is the edge on side ``faces[f][i] -> faces[f][i+1]``.
        Two sides sharing an id are glued.  Ids must be ``0..E-1``.  When
        omitted, sides are paired by their vertex pair, which fails on loops
        and multi-edges.

    Raises
    ------
    NonManifold, Disconnected, EulerObstruction
    """
    faces = np.asarray(faces, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
        raise MeshError("faces must be a non-empty (F, 3) array")
    if faces.min() < 0:
        raise MeshError("negative vertex id")
    if face_edges is None:
        face_edges = _infer_gluing(faces)
    face_edges = np.asarray(face_edges, dtype=np.int64)
    if face_edges.shape != faces.shape:
        raise MeshError("face_edges must have the same shape as faces")

    n_faces = len(faces)
    n_vertices = int(faces.max()) + 1
    used = np.zeros(n_vertices, dtype=bool)
    used[faces.ravel()] = True
    if not used.all():
        raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} is not in any face")

    counts = np.bincount(face_edges.ravel())
    if face_edges.min() < 0 or len(counts) * 2 != 3 * n_faces or np.any(counts != 2):
        bad = [int(e) for e in np.flatnonzero(counts != 2)] if face_edges.min() >= 0 else []
        raise NonManifold(
            "every edge id must be glued to exactly two face sides and ids must be "
            f"contiguous from 0 (offending edges: {bad[:10]})"
        )
    n_edges = len(counts)

    origin = np.empty(2 * n_edges, dtype=np.int64)
    seen = np.zeros(n_edges, dtype=bool)
    he_faces = np.empty((n_faces, 3), dtype=np.int64)
    for f in range(n_faces):
        for i in range(3):
            e = face_edges[f, i]
            h = 2 * e + (1 if seen[e] else 0)
            seen[e] = True
            he_faces[f, i] = h
            origin[h] = faces[f, i]

    next_he = np.empty(2 * n_edges, dtype=np.int64)
    for f in range(n_faces):
        for i in range(3):
            next_he[he_faces[f, i]] = he_faces[f, (i + 1) % 3]

    # glued sides must run in opposite directions
    target = origin[next_he]
    if np.any(origin[0::2] != target[1::2]) or np.any(origin[1::2] != target[0::2]):
        bad = np.flatnonzero((origin[0::2] != target[1::2]) | (origin[1::2] != target[0::2]))
        raise NonManifold(f"edges {bad[:10].tolist()} are glued with inconsistent orientation")

    surface = MarkedSurface(origin, next_he, he_faces, n_vertices)
    _check_vertex_links(surface)
    _check_connected(surface)
    chi = surface.euler_characteristic
    if chi - n_vertices >= 0:
        raise EulerObstruction(
            f"chi(S - V) = {chi - n_vertices} >= 0: no PL metric exists (need |V| >= 3 on a sphere)"
        )
    return surface


def _check_vertex_links(surface):
    # every vertex id must be exactly one orbit of h -> next[twin[h]]
    H = surface.n_halfedges
    visited = np.zeros(H, dtype=bool)
    orbits = np.zeros(surface.n_vertices, dtype=np.int64)
    for start in range(H):
        if visited[start]:
            continue
        orbits[surface.origin[start]] += 1
        h = start
        while not visited[h]:
            visited[h] = True
            h = surface.next[h ^ 1]
    pinched = np.flatnonzero(orbits != 1)
    if len(pinched):
        raise NonManifold(f"vertex {int(pinched[0])} has a disconnected link")


def _check_connected(surface):
    seen = np.zeros(surface.n_faces, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for h in surface.faces[f]:
            g = surface.face_of[h ^ 1]
            if not seen[g]:
                seen[g] = True
                queue.append(g)
    if not seen.all():
        raise Disconnected(f"{int((~seen).sum())} faces are not reachable from face 0")


# --- metric layer -------------------------------------------------------------

def check_lengths(surface, lengths):
    """Coerce ``lengths`` to a float array and reject non-positive entries."""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (surface.n_edges,):
        raise InvalidMetric(f"expected {surface.n_edges} edge lengths, got shape {lengths.shape}")
    bad = np.flatnonzero(~np.isfinite(lengths) | (lengths <= 0))
    if len(bad):
        raise NonPositiveLength(f"edge {int(bad[0])} has length {lengths[bad[0]]!r}")
    return lengths


def _half_angle(a, b, c, tol=DEGENERATE_TOL):
    # angle opposite c from the half-angle formula; stable near 0 and pi
    a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c)))
    sa = b + c - a
    sb = a + c - b
    sc = a + b - c
    perim = a + b + c
    if np.any(np.minimum(np.minimum(sa, sb), sc) < -tol * perim):
        raise DegenerateTriangle("triangle inequality violated")
    sa, sb, sc = (np.maximum(x, 0.0) for x in (sa, sb, sc))
    return 2.0 * np.arctan2(np.sqrt(sa * sb), np.sqrt(perim * sc))


def corner_angle(a, b, c):
    """Angle (radians) opposite side ``c`` of the triangle with sides a, b, c.

    Works elementwise on arrays.  Raises DegenerateTriangle when a triangle
    inequality fails by more than 1e-12 of the perimeter.
    """
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0) or np.any(np.asarray(c) <= 0):
        raise DegenerateTriangle("side lengths must be positive")
    out = _half_angle(a, b, c)
    return float(out) if out.ndim == 0 else out


def _face_side_lengths(surface, lengths):
    return lengths[surface.faces >> 1]


def halfedge_angles(surface, lengths):
    """(H,) array: the corner angle opposite each halfedge."""
    L = _face_side_lengths(surface, lengths)
    l0, l1, l2 = L[:, 0], L[:, 1], L[:, 2]
    ang = np.empty(surface.n_halfedges)
    ang[surface.faces[:, 0]] = _half_angle(l1, l2, l0)
    ang[surface.faces[:, 1]] = _half_angle(l2, l0, l1)
    ang[surface.faces[:, 2]] = _half_angle(l0, l1, l2)
    return ang


def halfedge_cotangents(surface, lengths):
    """(H,) array: cot of the corner angle opposite each halfedge."""
    L = _face_side_lengths(surface, lengths)
    l0, l1, l2 = L[:, 0], L[:, 1], L[:, 2]
    s = 0.5 * (l0 + l1 + l2)
    area = np.sqrt(np.maximum(s * (s - l0) * (s - l1) * (s - l2), 0.0))
    if np.any(area <= 0):
        raise DegenerateTriangle("zero-area face")
    cot = np.empty(surface.n_halfedges)
    cot[surface.faces[:, 0]] = (l1 ** 2 + l2 ** 2 - l0 ** 2) / (4 * area)
    cot[surface.faces[:, 1]] = (l2 ** 2 + l0 ** 2 - l1 ** 2) / (4 * area)
    cot[surface.faces[:, 2]] = (l0 ** 2 + l1 ** 2 - l2 ** 2) / (4 * area)
    return cot


def cone_angles(surface, lengths):
    ang = halfedge_angles(surface, lengths)
    corner_vertex = surface.origin[surface.prev(np.arange(surface.n_halfedges))]
    return np.bincount(corner_vertex, weights=ang, minlength=surface.n_vertices)


def vertex_curvature(surface, lengths, v):
    """Discrete curvature at ``v``: 2*pi minus the cone angle."""
    return float(2 * np.pi - cone_angles(surface, lengths)[v])


def curvature_field(surface, lengths):
    """Curvature at every vertex, with a Gauss-Bonnet audit."""
    K = 2 * np.pi - cone_angles(surface, lengths)
    defect = K.sum() - 2 * np.pi * surface.euler_characteristic
    if abs(defect) > GAUSS_BONNET_TOL:
        raise GaussBonnetViolation(f"sum of curvatures off by {defect:.3e}")
    return K


def conformal_scale(surface, lengths, u):
    """Multiply each edge length by exp(u(v) + u(v')); loops at v get exp(2u(v)).

    The result is not checked; see :func:`validate_metric`.
    """
    u = np.asarray(u, dtype=float)
    ends = surface.edge_endpoints()
    return np.asarray(lengths, dtype=float) * np.exp(u[ends[:, 0]] + u[ends[:, 1]])


def validate_metric(surface, lengths):
    """Indices of faces whose side lengths fail a strict triangle inequality."""
    lengths = check_lengths(surface, lengths)
    L = _face_side_lengths(surface, lengths)
    total = L.sum(axis=1)
    slack = total[:, None] - 2 * L
    return [int(f) for f in np.flatnonzero(np.any(slack <= 0, axis=1))]
