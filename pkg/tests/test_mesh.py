import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twofluid.mesh import (
    FESpace, MeshError, bubble, build_uniform_mesh, degree4_rule, edge_rule, eval_gradient_p1, eval_p1,
)


def test_single_cell():
    m = build_uniform_mesh(1, 1)
    assert m.n_triangles == 2 and m.n_vertices == 4
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-15)


def test_forty_by_forty_counts():
    m = build_uniform_mesh(40, 40)
    assert (m.n_triangles, m.n_vertices) == (3200, 1681)


def test_two_by_three_area():
    m = build_uniform_mesh(2, 3)
    assert m.n_triangles == 12
    assert abs(m.areas.sum() - 1.0) <= 1e-14


@pytest.mark.parametrize("nx,ny", [(0, 1), (1, -2), (1.5, 2)])
def test_bad_resolution(nx, ny):
    with pytest.raises(MeshError):
        build_uniform_mesh(nx, ny)


def test_orientation_and_diagonal():
    m = build_uniform_mesh(3, 2, (2.0, 1.0))
    assert np.all(m.areas > 0)
    # every cell is split along its lower-left to upper-right diagonal
    v = m.vertices[m.triangles]
    for tri in v:
        xs, ys = tri[:, 0], tri[:, 1]
        ll = np.argmin(xs + ys)
        ur = np.argmax(xs + ys)
        assert xs[ur] > xs[ll] and ys[ur] > ys[ll]
    assert abs(m.areas.sum() - m.domain_area) <= 1e-12 * m.domain_area


def test_boundary_edges_belong_to_one_triangle():
    m = build_uniform_mesh(4, 3)
    edges = {}
    for t in m.triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = tuple(sorted((a, b)))
            edges[key] = edges.get(key, 0) + 1
    for a, b in m.boundary_edges:
        assert edges[tuple(sorted((a, b)))] == 1
    assert len(m.boundary_edges) == 2 * (4 + 3)
    assert len(m.boundary_vertices) == 2 * (4 + 3)
    # outward normals point away from the centre
    mid = m.vertices[m.boundary_edges].mean(axis=1)
    assert np.all(np.sum((mid - 0.5) * m.boundary_normals, axis=1) > 0)


def test_quadrature_exact_degree4():
    q = degree4_rule()
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-15)
    # reference triangle (0,0),(1,0),(0,1): x = l1, y = l2; area 1/2
    from math import factorial
    for a in range(5):
        for b in range(5 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            approx = 0.5 * np.sum(q.weights * q.points[:, 1] ** a * q.points[:, 2] ** b)
            assert abs(approx - exact) <= 1e-13 * exact


def test_partition_of_unity_and_bubble_trace(space4):
    assert np.max(np.abs(space4.lam.sum(axis=1) - 1.0)) <= 1e-14
    t, _ = edge_rule()
    for i, j in ((0, 1), (1, 2), (2, 0)):
        lam = np.zeros((len(t), 3))
        lam[:, i], lam[:, j] = t, 1 - t
        assert np.max(np.abs(bubble(lam))) < 1e-14
    assert bubble(np.array([1 / 3, 1 / 3, 1 / 3])) == pytest.approx(1.0, abs=1e-15)


def test_eval_p1_examples(rng):
    m = build_uniform_mesh(3, 3)
    assert eval_p1(m, np.full(m.n_vertices, 2.5), 4, [0.2, 0.3, 0.5]) == pytest.approx(2.5)
    e = 7
    assert eval_p1(m, m.vertices[:, 0], e, [1 / 3] * 3) == pytest.approx(m.barycenters[e, 0])
    f = rng.normal(size=m.n_vertices)
    for i in range(3):
        lam = np.zeros(3)
        lam[i] = 1
        assert eval_p1(m, f, e, lam) == f[m.triangles[e, i]]
    with pytest.raises(MeshError):
        eval_p1(m, f, m.n_triangles, [1, 0, 0])


def test_gradient_examples(rng):
    m = build_uniform_mesh(3, 2)
    assert np.allclose(eval_gradient_p1(m, np.ones(m.n_vertices)), 0.0, atol=1e-14)
    g = eval_gradient_p1(m, 2 * m.vertices[:, 0] + 3 * m.vertices[:, 1])
    assert np.allclose(g, [2.0, 3.0], atol=1e-13)
    f = rng.normal(size=m.n_vertices)
    e = 3
    grad = eval_gradient_p1(m, f, e)
    # finite differences of eval_p1 through the map x -> barycentric coordinates
    v = m.vertices[m.triangles[e]]
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    x0 = v.mean(axis=0)
    h = 1e-6

    def val(x):
        s = np.linalg.solve(T, x - v[0])
        return eval_p1(m, f, e, [1 - s.sum(), s[0], s[1]])

    fd = [(val(x0 + h * d) - val(x0 - h * d)) / (2 * h) for d in np.eye(2)]
    assert np.allclose(fd, grad, atol=1e-6)


def test_space_uniform_gradient_is_exact_zero(space4):
    assert np.all(space4.p1_grad_e(np.full(space4.nv, 1.01325e5)) == 0.0)


def test_interpolate_velocity_linear_exact(space4):
    u = space4.interpolate_velocity(lambda x, y: (x + 2 * y, 3 - y))
    uq = space4.vel_qp(u)
    X, Y = space4.qp_xy[..., 0], space4.qp_xy[..., 1]
    assert np.allclose(uq[..., 0], X + 2 * Y, atol=1e-13)
    assert np.allclose(uq[..., 1], 3 - Y, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 10), st.floats(0.1, 10))
def test_mesh_area_property(nx, ny, lx, ly):
    m = build_uniform_mesh(nx, ny, (lx, ly))
    assert np.all(m.areas > 0)
    assert abs(m.areas.sum() - lx * ly) <= 1e-12 * lx * ly
    assert m.n_vertices == (nx + 1) * (ny + 1)
