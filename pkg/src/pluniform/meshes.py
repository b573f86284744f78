"""Small reference complexes and random metric generators.

These are the test surfaces used throughout: Platonic spheres, the
double of a triangle, one-vertex and grid tori, and a two-vertex genus-2
surface, plus intrinsic midpoint subdivision to make any of them larger.
"""
import numpy as np

from .surface import build_surface, validate_metric

__all__ = [
    "tetrahedron",
    "octahedron",
    "icosahedron",
    "double_triangle",
    "one_vertex_torus",
    "grid_torus",
    "genus2_octagon",
    "subdivide",
    "random_metric",
    "perturbed_metric",
    "random_conformal_metric",
]


def tetrahedron(length=1.0):
    faces = [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]
    M = build_surface(faces)
    return M, np.full(M.n_edges, float(length))


def _embedded(points, faces):
    M = build_surface(faces)
    ends = M.edge_endpoints()
    return M, np.linalg.norm(points[ends[:, 0]] - points[ends[:, 1]], axis=1)


def octahedron():
    pts = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    faces = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
             [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    return _embedded(pts, faces)


def icosahedron():
    p = (1 + 5 ** 0.5) / 2
    pts = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                    [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                    [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], float)
    faces = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
             [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
             [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
             [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    return _embedded(pts, faces)


def double_triangle(a, b, c):
    """Two copies of a triangle glued along their boundaries (a sphere, |V| = 3).

    Edge 0 joins v0 v1 with length ``a``, edge 1 joins v1 v2 (``b``), edge 2
    joins v2 v0 (``c``).
    """
    M = build_surface([[0, 1, 2], [0, 2, 1]], [[0, 1, 2], [2, 1, 0]])
    return M, np.array([a, b, c], dtype=float)


def one_vertex_torus(a=1.0, b=1.0, c=1.0):
    """Torus from one square-like quad cut by a diagonal: 1 vertex, 3 loops."""
    M = build_surface([[0, 0, 0], [0, 0, 0]], [[0, 1, 2], [2, 0, 1]])
    return M, np.array([a, b, c], dtype=float)


def grid_torus(n, m):
    """n x m periodic grid with one diagonal per cell; unit squares (n, m >= 3)."""
    if n < 3 or m < 3:
        raise ValueError("grid_torus needs n, m >= 3 so vertex pairs are unambiguous")
    idx = lambda i, j: (i % n) * m + (j % m)
    faces = []
    for i in range(n):
        for j in range(m):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            faces += [[a, b, c], [a, c, d]]
    M = build_surface(faces)
    ends = M.edge_endpoints()
    # an edge is a diagonal iff its endpoints differ in both grid coordinates
    di = (ends[:, 0] // m) != (ends[:, 1] // m)
    dj = (ends[:, 0] % m) != (ends[:, 1] % m)
    return M, np.where(di & dj, 2 ** 0.5, 1.0)


def genus2_octagon(spoke=1.0):
    """Regular octagon with side word a b a^-1 b^-1 c d c^-1 d^-1, coned from its centre.

    Two vertices: 0 (all octagon corners) and 1 (the centre); 12 edges with
    8 spokes (ids 0-7) and 4 loops (ids 8-11).
    """
    faces, face_edges = [], []
    sides = [8, 9, 8, 9, 10, 11, 10, 11]
    for k in range(8):
        faces.append([1, 0, 0])
        face_edges.append([k, sides[k], (k + 1) % 8])
    M = build_surface(faces, face_edges)
    side = 2 * spoke * np.sin(np.pi / 8)
    lengths = np.array([spoke] * 8 + [side] * 4)
    return M, lengths


def subdivide(surface, lengths):
    """Intrinsic 1-to-4 midpoint subdivision; the metric is unchanged."""
    V, E = surface.n_vertices, surface.n_edges
    faces, face_edges = [], []
    new_len = np.empty(2 * E + 3 * surface.n_faces)
    new_len[0::2][:E] = lengths / 2
    new_len[1::2][:E] = lengths / 2

    def part(h, k):
        # edge id of piece k of halfedge h (k=0 from its origin to the midpoint)
        e = h >> 1
        return 2 * e + ((h & 1) ^ k)

    for f, (h0, h1, h2) in enumerate(surface.faces):
        a, b, c = surface.origin[[h0, h1, h2]]
        m0, m1, m2 = V + (h0 >> 1), V + (h1 >> 1), V + (h2 >> 1)
        i0, i1, i2 = 2 * E + 3 * f, 2 * E + 3 * f + 1, 2 * E + 3 * f + 2
        new_len[i0] = lengths[h1 >> 1] / 2
        new_len[i1] = lengths[h2 >> 1] / 2
        new_len[i2] = lengths[h0 >> 1] / 2
        faces += [[a, m0, m2], [m0, b, m1], [m2, m1, c], [m0, m1, m2]]
        face_edges += [[part(h0, 0), i0, part(h2, 1)],
                       [part(h0, 1), part(h1, 0), i1],
                       [i2, part(h1, 1), part(h2, 0)],
                       [i1, i2, i0]]
    return build_surface(faces, face_edges), new_len


def random_metric(surface, rng, low=1.0, high=1.5):
    """Independent uniform edge lengths; any high < 2*low is automatically valid."""
    if high >= 2 * low:
        raise ValueError("need high < 2*low for guaranteed triangle inequalities")
    return rng.uniform(low, high, surface.n_edges)


def perturbed_metric(surface, lengths, rng, scale=0.1, max_tries=1000):
    """Multiply lengths by factors in [1 - scale, 1 + scale] until valid."""
    for _ in range(max_tries):
        out = lengths * rng.uniform(1 - scale, 1 + scale, surface.n_edges)
        if not validate_metric(surface, out):
            return out
    raise RuntimeError("could not draw a valid perturbation")


def random_conformal_metric(surface, lengths, rng, scale=0.5, max_tries=1000):
    """Random vertex scaling of ``lengths`` kept only if it stays Euclidean.

    Produces metrics that are far from Delaunay, for exercising flips.
    """
    from .surface import conformal_scale

    for _ in range(max_tries):
        u = rng.normal(0.0, scale, surface.n_vertices)
        out = conformal_scale(surface, lengths, u)
        if not validate_metric(surface, out):
            return out
        scale *= 0.95
    raise RuntimeError("could not draw a valid conformal perturbation")
