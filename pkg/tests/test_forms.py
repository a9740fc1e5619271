import numpy as np
import pytest

from twofluid import forms
from twofluid.mesh import FESpace, build_uniform_mesh


def test_velocity_mass_integrates_products(space4):
    s = space4
    Mv = forms.assemble_vel(s, forms.vel_mass(s))
    u = s.interpolate_velocity(lambda x, y: (1 + x, y * 0 + 2))
    # int (1 + x)^2 = 7/3
    assert u[0] @ (Mv @ u[0]) == pytest.approx(7 / 3, rel=1e-13)
    assert abs(Mv - Mv.T).max() <= 1e-15


def test_hat_bubble_mass_entry():
    s = FESpace(build_uniform_mesh(1, 1))
    local = forms.vel_mass(s)
    # degree-4 product, integrated exactly: 27 int l1^2 l2 l3 = 27 |T| / 180
    for a in range(3):
        assert local[0, a, 3] == pytest.approx(0.15 * s.mesh.areas[0], rel=1e-13)


def test_skew_convection_diagonal(space8, rng):
    s = space8
    a = s.p1_qp(rng.uniform(1, 2, s.nv))
    w = s.vel_qp(rng.normal(size=(2, s.n_vel)))
    src = s.p1_qp(rng.normal(size=s.nv))
    K = forms.assemble_vel(s, forms.vel_convection_skew(s, a, w, src))
    Ms = forms.assemble_vel(s, forms.vel_mass(s, src))
    u = rng.normal(size=s.n_vel)
    assert u @ (K @ u) == pytest.approx(u @ (Ms @ u), rel=1e-11, abs=1e-13)


def test_skew_matches_divergence_form_for_steady_transport(space8):
    # a uniform and w divergence free: both forms reduce to (a w.grad u, v)
    s = space8
    a = np.full((s.nt, s.nq), 1.7)
    w = s.vel_qp(s.interpolate_velocity(lambda x, y: (np.ones_like(x), 2 * np.ones_like(y))))
    skew = forms.assemble_vel(s, forms.vel_convection_skew(s, a, w, np.zeros_like(a)))
    div = forms.assemble_vel(s, forms.vel_convection(s, a, np.zeros_like(a), w))
    u = s.interpolate_velocity(lambda x, y: (np.sin(3 * x) * y * (1 - y) * x * (1 - x), 0 * x))[0]
    u[~s.vel_free] = 0.0
    v = s.interpolate_velocity(lambda x, y: (x * (1 - x) * y * (1 - y), 0 * x))[0]
    v[~s.vel_free] = 0.0
    assert v @ (skew @ u) == pytest.approx(v @ (div @ u), rel=1e-12)


def test_viscous_kernel_rigid_motion(space4):
    s = space4
    A = forms.assemble_vel(s, forms.vel_viscous(s, np.full((s.nt, s.nq), 2.5)))
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()
    u = s.interpolate_velocity(lambda x, y: (-y, x)).ravel()  # D(u) = 0
    assert np.max(np.abs(A @ u)) <= 1e-12
    shear = s.interpolate_velocity(lambda x, y: (y, 0 * x)).ravel()
    # 2 mu |D|^2 with D = [[0, .5], [.5, 0]] integrates to mu
    assert shear @ (A @ shear) == pytest.approx(2.5, rel=1e-12)
    lam = forms.assemble_vel(s, forms.vel_viscous(s, np.zeros((s.nt, s.nq)), np.ones((s.nt, s.nq))))
    dil = s.interpolate_velocity(lambda x, y: (x, y)).ravel()
    assert dil @ (lam @ dil) == pytest.approx(4.0, rel=1e-12)


def test_divergence_coupling_linear_field(space4):
    s = space4
    from twofluid.linalg import assemble, p1_layout, velocity_layout
    B = assemble(forms.divergence_coupling(s), velocity_layout(s), p1_layout(s))
    u = s.interpolate_velocity(lambda x, y: (3 * x, -y)).ravel()  # div = 2
    assert (B @ u).sum() == pytest.approx(-2.0, rel=1e-13)


def test_loads_and_gradient_loads(space4, rng):
    s = space4
    f = np.full((s.nt, s.nq), 2.0)
    assert forms.scatter_p1(s, forms.p1_load(s, f)).sum() == pytest.approx(2.0, rel=1e-14)
    F = np.zeros((s.nt, s.nq, 2))
    F[..., 0] = 1.0
    q = s.mesh.vertices[:, 0]
    # (F, grad x) = int 1
    assert forms.scatter_p1(s, forms.p1_grad_load(s, F)) @ q == pytest.approx(1.0, rel=1e-13)
    vl = forms.scatter_vel(s, forms.vel_load(s, F))
    ones = s.interpolate_velocity(lambda x, y: (np.ones_like(x), 0 * x))
    assert np.sum(vl * ones) == pytest.approx(1.0, rel=1e-13)


def test_advection_of_constants(space4, rng):
    s = space4
    K = forms.assemble_p1(s, forms.p1_advection(s, s.vel_qp(rng.normal(size=(2, s.n_vel)))))
    assert np.max(np.abs(K @ np.ones(s.nv))) <= 1e-13
