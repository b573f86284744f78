import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluniform import meshes
from pluniform.delaunay import EdgeStatus, classify, delaunay_quantity, is_delaunay_edge
from pluniform.exceptions import NotDelaunay
from pluniform.penner import (
    DecoratedMetric,
    conformal_scale_lambda,
    decorated_angles,
    edge_shear,
    hyperbolic_delaunay_edge,
    hyperbolic_delaunay_quantity,
    penner_angle,
    pl_to_decorated,
    ptolemy_delaunay,
    ptolemy_flip,
    replay_flips,
    shear_vector,
)

from conftest import rectangle_torus

positive = st.floats(0.05, 20.0)


def test_penner_angle_examples():
    assert penner_angle(1, 1, 1) == 1
    assert penner_angle(2, 1, 1) == 2


@settings(max_examples=200, deadline=None)
@given(positive, positive, positive)
def test_log_relation(Li, Lj, Lk):
    a_i = penner_angle(Li, Lj, Lk)
    a_j = penner_angle(Lj, Lk, Li)
    assert np.log(a_i) + np.log(a_j) == pytest.approx(-2 * np.log(Lk), abs=1e-12)


def test_pl_to_decorated_examples():
    M, d = meshes.tetrahedron()
    D = pl_to_decorated(M, d)
    np.testing.assert_array_equal(D.lam, 1.0)
    np.testing.assert_allclose(D.w, 3.0)
    np.testing.assert_allclose(D.hyp_length, 0.0)
    M, d = meshes.one_vertex_torus()
    np.testing.assert_allclose(pl_to_decorated(M, d).w, [6.0])


def test_pl_to_decorated_requires_delaunay():
    M, d = meshes.double_triangle(1.0, 1.0, 1.9)
    with pytest.raises(NotDelaunay):
        pl_to_decorated(M, d)


def test_hyperbolic_predicate_examples():
    assert classify(hyperbolic_delaunay_quantity(5, 3, 4, 3, 4)) is EdgeStatus.COCIRCULAR
    assert classify(hyperbolic_delaunay_quantity(1, 1, 1, 1, 1)) is EdgeStatus.STRICT


def test_hyperbolic_predicate_matches_euclidean(rng):
    M, d0 = meshes.icosahedron()
    for _ in range(20):
        d = meshes.random_conformal_metric(M, d0, rng, 0.4)
        D = DecoratedMetric(M, d)
        for e in range(M.n_edges):
            assert hyperbolic_delaunay_edge(D, e) is is_delaunay_edge(M, d, e)
            q = M.quad_lengths(d, e)
            assert hyperbolic_delaunay_quantity(*q) == pytest.approx(delaunay_quantity(*q), abs=1e-12)


def test_ptolemy_flip_rectangle():
    M, d = rectangle_torus()
    e = int(np.flatnonzero(np.isclose(d, 5.0))[0])
    assert ptolemy_flip(DecoratedMetric(M, d), e).lam[e] == pytest.approx(5.0)


def test_ptolemy_flip_involution():
    M, d = meshes.double_triangle(1, 1, 1)
    D = DecoratedMetric(M, d)
    once = ptolemy_flip(D, 0)
    assert once.lam[0] == pytest.approx(2.0)
    twice = ptolemy_flip(once, 0)
    assert twice.lam[0] == pytest.approx(1.0)
    # same diagonal again, possibly with the halfedge pair reversed
    assert sorted(twice.surface.edge_vertices(0)) == sorted(M.edge_vertices(0))
    # original untouched
    assert D.lam[0] == 1.0


def test_flips_preserve_horocycle_lengths(rng):
    M, _ = meshes.subdivide(*meshes.tetrahedron())
    D = DecoratedMetric(M, rng.uniform(0.3, 3.0, M.n_edges))
    w0 = D.w
    for e in rng.integers(0, M.n_edges, 40):
        if not D.surface.is_self_glued(int(e)):
            D = ptolemy_flip(D, int(e))
    np.testing.assert_allclose(D.w, w0, rtol=1e-12)


def test_ptolemy_delaunay_terminates(rng):
    M, _ = meshes.icosahedron()
    D = DecoratedMetric(M, np.exp(rng.normal(0, 0.5, M.n_edges)))
    out, log = ptolemy_delaunay(D)
    assert all(hyperbolic_delaunay_edge(out, e) is not EdgeStatus.VIOLATED for e in range(M.n_edges))
    np.testing.assert_allclose(out.w, D.w, rtol=1e-12)
    np.testing.assert_allclose(replay_flips(D, log.edges()).lam, out.lam, rtol=1e-14)


def test_conformal_scale_lambda(rng):
    M, d = meshes.tetrahedron()
    D = DecoratedMetric(M, rng.uniform(1, 1.5, 6))
    np.testing.assert_array_equal(conformal_scale_lambda(D, np.zeros(4)).lam, D.lam)
    c = 0.37
    scaled = conformal_scale_lambda(D, [c, 0, 0, 0])
    corner_vertex = M.origin[M.prev(np.arange(M.n_halfedges))]
    ratio = decorated_angles(M, scaled.lam) / decorated_angles(M, D.lam)
    np.testing.assert_allclose(ratio[corner_vertex == 0], np.exp(-2 * c))
    np.testing.assert_allclose(ratio[corner_vertex != 0], 1.0)
    w = scaled.w
    assert w[0] == pytest.approx(D.w[0] * np.exp(-2 * c))


def test_edge_shear_unit():
    M, d = meshes.icosahedron()
    D = DecoratedMetric(M, np.ones(M.n_edges))
    assert edge_shear(D, 0) == 1.0
    np.testing.assert_array_equal(shear_vector(D), 1.0)


@pytest.mark.parametrize("make", [meshes.icosahedron, meshes.one_vertex_torus, meshes.genus2_octagon])
def test_shear_invariance(make, rng):
    M, d = make()
    D = DecoratedMetric(M, d * rng.uniform(0.8, 1.2, M.n_edges))
    s0 = shear_vector(D)
    for _ in range(5):
        s = shear_vector(conformal_scale_lambda(D, rng.normal(0, 1.0, M.n_vertices)))
        np.testing.assert_allclose(s, s0, rtol=1e-12)
    np.testing.assert_allclose(s0, [edge_shear(D, e) for e in range(M.n_edges)], rtol=1e-14)
