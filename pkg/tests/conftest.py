import numpy as np
import pytest

from pluniform import meshes

# (criterion number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE_ROWS = []


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)


@pytest.fixture
def acceptance_log():
    def record(number, title, passed, detail=""):
        ACCEPTANCE_ROWS.append((number, title, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_ROWS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_ROWS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")


def sample_surfaces():
    """Named closed surfaces with their reference metrics (sphere, torus, genus 2)."""
    return {
        "tetrahedron": meshes.tetrahedron(),
        "octahedron": meshes.octahedron(),
        "icosahedron": meshes.icosahedron(),
        "double_triangle": meshes.double_triangle(3.0, 4.0, 5.0),
        "one_vertex_torus": meshes.one_vertex_torus(),
        "grid_torus": meshes.grid_torus(3, 4),
        "genus2": meshes.genus2_octagon(),
        "genus2_sub": meshes.subdivide(*meshes.genus2_octagon()),
    }


def inscribed_quad(rng, min_gap=0.25):
    """(x, y, z, w, a) of a random convex quadrilateral P R Q S on a circle.

    Diagonal a = |PQ|; triangle (x, y, a) = (|QR|, |PR|, |PQ|) and
    (z, w, a) = (|PS|, |QS|, |PQ|).
    """
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, 4))
        gaps = np.diff(np.append(t, t[0] + 2 * np.pi))
        if gaps.min() > min_gap:
            break
    r = rng.uniform(0.5, 3.0)
    P, R, Q, S = (r * np.array([np.cos(s), np.sin(s)]) for s in t)
    dist = lambda A, B: float(np.linalg.norm(A - B))
    return dist(Q, R), dist(P, R), dist(P, S), dist(Q, S), dist(P, Q)


def rectangle_torus(n=3, m=4, h=3.0, v=4.0):
    """Grid torus whose cells are h x v rectangles split by a diagonal."""
    M, _ = meshes.grid_torus(n, m)
    ends = M.edge_endpoints()
    di = (ends[:, 0] // m) != (ends[:, 1] // m)
    dj = (ends[:, 0] % m) != (ends[:, 1] % m)
    return M, np.where(di & dj, np.hypot(h, v), np.where(di, h, v))
